"""Offline learning: full-batch BPTT with Adam over weights and adaptation vectors.

Every epoch runs one posterior rollout per sequence (all sequences batched),
backpropagates the negative evidence lower bound, and applies one Adam update
to the shared network tensors and to every per-sequence, per-step adaptation
vector.  Reported reconstruction errors are summed categorical divergences
between the encoded references and the decoded output of the posterior pass
and of a regeneration pass respectively.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adam import AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import NetworkConfig, RunConfig, config_from_dict
from .elbo import reconstruction_error
from .errors import CheckpointError, ConfigError
from .grads import bptt_gradients, global_norm
from .network import (
    LatentState,
    Rollout,
    generate_prior,
    initial_state,
    posterior_rollout,
    posterior_stats,
    context_step,
    decode_output,
    sample_z,
)
from .params import NetworkParams, init_params


@dataclass
class TrainingSet:
    """Labeled reference sequences with their softmax encodings.

    positions: (S, T, dof) workspace values; frames: (S, T, dof, bins).
    """

    labels: list[str]
    positions: np.ndarray
    frames: np.ndarray

    def __post_init__(self) -> None:
        if self.positions.ndim != 3 or self.frames.ndim != 4:
            raise ConfigError("training set arrays have wrong rank")
        if self.positions.shape[1] < 2:
            raise ConfigError("sequences must have at least 2 steps")
        if len(self.labels) != self.positions.shape[0]:
            raise ConfigError("one label per sequence required")

    @property
    def n_sequences(self) -> int:
        return self.positions.shape[0]

    @property
    def steps(self) -> int:
        return self.positions.shape[1]


@dataclass
class AdaptiveWindow:
    """Adaptation vectors a_mu/a_sig per layer, time-major (T, ..., z_k).

    Training keeps one batched window covering all sequences (batch dim after
    time); `select` extracts a single sequence's window.
    """

    a_mu: list[np.ndarray]
    a_sig: list[np.ndarray]

    @property
    def steps(self) -> int:
        return self.a_mu[0].shape[0]

    def select(self, s: int) -> "AdaptiveWindow":
        return AdaptiveWindow(
            a_mu=[a[:, s].copy() for a in self.a_mu],
            a_sig=[a[:, s].copy() for a in self.a_sig],
        )

    def copy(self) -> "AdaptiveWindow":
        return AdaptiveWindow(
            a_mu=[a.copy() for a in self.a_mu],
            a_sig=[a.copy() for a in self.a_sig],
        )


def zero_window(
    config: NetworkConfig, steps: int, batch_shape: tuple[int, ...] = ()
) -> AdaptiveWindow:
    return AdaptiveWindow(
        a_mu=[np.zeros((steps,) + batch_shape + (s.z_units,)) for s in config.layers],
        a_sig=[np.zeros((steps,) + batch_shape + (s.z_units,)) for s in config.layers],
    )


REPORT_HEADER = ["epoch", "post_rec", "prior_rec", "regulation", "nelbo"]


@dataclass
class TrainingReport:
    """Per-epoch optimization trace, one row per reported epoch."""

    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)

    def add(self, epoch: int, post: float, prior: float, reg: float, nelbo: float):
        self.rows.append((epoch, post, prior, reg, nelbo))

    def column(self, name: str) -> np.ndarray:
        idx = REPORT_HEADER.index(name)
        return np.array([row[idx] for row in self.rows])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_HEADER)
            for row in self.rows:
                writer.writerow([row[0]] + [f"{v:.10g}" for v in row[1:]])


@dataclass
class TrainResult:
    params: NetworkParams
    window: AdaptiveWindow
    report: TrainingReport
    adam: AdamState
    diverged_at: int | None = None


def regenerate(
    params: NetworkParams,
    window: AdaptiveWindow,
    config: NetworkConfig,
    steps: int,
    warm_steps: int = 1,
    eps_mode: str = "zeros",
    rng: np.random.Generator | None = None,
) -> Rollout:
    """Regeneration: posterior for the first step(s), closed-loop prior after.

    The per-sequence posterior's opening adaptation selects which learned
    cycle to enter; the remaining steps run closed-loop from the prior, with
    zero noise by default ("sampled" draws latent noise from the prior).
    Returns a prior-style Rollout of `steps` steps whose leading batch shape
    follows the window's.
    """
    if not 1 <= warm_steps < steps:
        raise ValueError("need 1 <= warm_steps < steps")
    batch_shape = window.a_mu[0].shape[1:-1]
    state = initial_state(config, batch_shape)
    h, d = state.h, state.d
    warm_states = []
    for t in range(warm_steps):
        z_t = []
        for k, lp in enumerate(params.layers):
            mu_q, rho_q = posterior_stats(
                d[k], window.a_mu[k][t], window.a_sig[k][t], lp
            )
            z_t.append(sample_z(mu_q, rho_q, np.zeros_like(mu_q)))
        h, d = context_step(h, d, z_t, params, config)
        warm_states.append((h, d, z_t))
    tail = generate_prior(
        LatentState(h=h, d=d), steps - warm_steps, params, config,
        eps_mode=eps_mode, rng=rng,
    )
    # Prepend the warm steps so the rollout covers all `steps` outputs.
    outs = [decode_output(ws[1][0], params) for ws in warm_states]
    outputs = np.concatenate([np.stack(outs), tail.outputs], axis=0)
    full_h = [
        np.concatenate([np.stack([ws[0][k] for ws in warm_states]), tail.h[k]])
        for k in range(config.n_layers)
    ]
    full_d = [
        np.concatenate([np.stack([ws[1][k] for ws in warm_states]), tail.d[k]])
        for k in range(config.n_layers)
    ]
    full_z = [
        np.concatenate([np.stack([ws[2][k] for ws in warm_states]), tail.z[k]])
        for k in range(config.n_layers)
    ]
    zeros_head = [np.zeros_like(z[:warm_steps]) for z in full_z]
    return Rollout(
        init=initial_state(config, batch_shape),
        h=full_h,
        d=full_d,
        z=full_z,
        eps=[np.zeros_like(z) for z in full_z],
        mu_p=[np.concatenate([zeros_head[k], tail.mu_p[k]]) for k in range(config.n_layers)],
        rho_p=[np.concatenate([zeros_head[k], tail.rho_p[k]]) for k in range(config.n_layers)],
        mu_q=None,
        rho_q=None,
        outputs=outputs,
    )


def opening_state(
    params: NetworkParams,
    window: AdaptiveWindow,
    config: NetworkConfig,
    warm_steps: int = 1,
) -> LatentState:
    """Context after the posterior's opening step(s); selects a learned cycle."""
    batch_shape = window.a_mu[0].shape[1:-1]
    state = initial_state(config, batch_shape)
    h, d = state.h, state.d
    for t in range(warm_steps):
        z_t = []
        for k, lp in enumerate(params.layers):
            mu_q, rho_q = posterior_stats(
                d[k], window.a_mu[k][t], window.a_sig[k][t], lp
            )
            z_t.append(sample_z(mu_q, rho_q, np.zeros_like(mu_q)))
        h, d = context_step(h, d, z_t, params, config)
    return LatentState(h=h, d=d)


def warm_state_for(model: "LoadedModel", config: RunConfig) -> LatentState | None:
    """Opening context for the configured start primitive, None otherwise."""
    label = config.session.start_primitive
    if label is None:
        return None
    if label not in model.labels:
        raise ConfigError(
            f"start_primitive '{label}' not among trained labels {model.labels}"
        )
    return opening_state(
        model.params, model.window.select(model.labels.index(label)),
        config.network,
    )


def _param_tensor_dict(params: NetworkParams) -> dict[str, np.ndarray]:
    return dict(params.named_tensors())


def _window_tensor_dict(window: AdaptiveWindow) -> dict[str, np.ndarray]:
    out = {}
    for k, (am, asig) in enumerate(zip(window.a_mu, window.a_sig)):
        out[f"window.layer{k}.a_mu"] = am
        out[f"window.layer{k}.a_sig"] = asig
    return out


def train(
    training_set: TrainingSet,
    config: RunConfig,
    epochs: int | None = None,
    report_every: int | None = None,
    eps_mode: str = "sampled",
) -> TrainResult:
    """Full-batch training loop; deterministic given config.seed.

    eps_mode "sampled" draws fresh reparameterization noise every epoch (the
    single-sample bound); "zeros" optimizes the mode-approximated bound, which
    is fully deterministic and useful for optimizer smoke tests.  Stops early
    (keeping the last finite state) if the loss goes non-finite.
    """
    epochs = config.training.epochs if epochs is None else epochs
    report_every = (
        config.training.report_every if report_every is None else report_every
    )
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    if report_every < 1:
        raise ConfigError(f"report_every must be >= 1, got {report_every}")
    if eps_mode not in ("sampled", "zeros"):
        raise ConfigError(f"eps_mode must be sampled|zeros, got {eps_mode}")

    net = config.network
    S, T = training_set.n_sequences, training_set.steps
    rng = np.random.default_rng(config.seed)
    params = init_params(net, rng)
    window = zero_window(net, T, (S,))
    targets = np.swapaxes(training_set.frames, 0, 1).copy()  # (T, S, dof, bins)
    adam = AdamState(
        alpha=config.training.alpha,
        beta1=config.training.beta1,
        beta2=config.training.beta2,
        eps=config.training.eps_adam,
    )
    report = TrainingReport()
    init = initial_state(net, (S,))
    snapshot = (params.copy(), window.copy())
    diverged_at = None

    for epoch in range(1, epochs + 1):
        if eps_mode == "sampled":
            eps = [rng.standard_normal((T, S, spec.z_units)) for spec in net.layers]
        else:
            eps = [np.zeros((T, S, spec.z_units)) for spec in net.layers]
        rollout = posterior_rollout(init, window.a_mu, window.a_sig, eps, params, net)
        result = bptt_gradients(targets, rollout, params, net)
        if not np.isfinite(result.parts.nelbo):
            diverged_at = epoch
            params, window = snapshot
            break
        snapshot = (params.copy(), window.copy())

        a_grads = result.a_mu_grads + result.a_sig_grads
        clip = config.training.grad_clip
        if clip > 0:
            norm = global_norm(result.param_grads, a_grads)
            if norm > clip:
                scale = clip / norm
                for _, arr in result.param_grads.named_tensors():
                    arr *= scale
                for arr in a_grads:
                    arr *= scale

        tensors = _param_tensor_dict(params) | _window_tensor_dict(window)
        grads = dict(result.param_grads.named_tensors())
        for k in range(net.n_layers):
            grads[f"window.layer{k}.a_mu"] = result.a_mu_grads[k]
            grads[f"window.layer{k}.a_sig"] = result.a_sig_grads[k]
        adam_step(tensors, grads, adam)

        if epoch % report_every == 0 or epoch == 1 or epoch == epochs:
            post_rec = reconstruction_error(targets, rollout.outputs)
            regen = regenerate(params, window, net, T)
            prior_rec = reconstruction_error(targets, regen.outputs)
            report.add(
                epoch, post_rec, prior_rec, result.parts.regulation,
                result.parts.nelbo,
            )

    return TrainResult(
        params=params, window=window, report=report, adam=adam,
        diverged_at=diverged_at,
    )


# ---------------------------------------------------------------------------
# Checkpoint glue
# ---------------------------------------------------------------------------


def save_model(
    path: str | Path,
    params: NetworkParams,
    window: AdaptiveWindow,
    config: RunConfig,
    labels: list[str],
    adam: AdamState | None = None,
) -> None:
    tensors = _param_tensor_dict(params) | _window_tensor_dict(window)
    extra: dict = {"adam": None}
    if adam is not None:
        extra["adam"] = {
            "alpha": adam.alpha, "beta1": adam.beta1, "beta2": adam.beta2,
            "eps": adam.eps, "step": adam.step,
        }
        for name in list(tensors):
            if name in adam.m:
                tensors[f"adam.m.{name}"] = adam.m[name]
                tensors[f"adam.v.{name}"] = adam.v[name]
    save_checkpoint(
        path, "pvrnn", config.to_dict(), config.hash(), tensors, labels, extra
    )


@dataclass
class LoadedModel:
    params: NetworkParams
    window: AdaptiveWindow
    config: RunConfig
    labels: list[str]
    adam: AdamState | None


def load_model(path: str | Path) -> LoadedModel:
    ck: Checkpoint = load_checkpoint(path)
    if ck.kind != "pvrnn":
        raise CheckpointError(f"{path}: expected a pvrnn checkpoint, got '{ck.kind}'")
    config = config_from_dict(ck.config)
    params = init_params(config.network)
    for name, _ in list(params.named_tensors()):
        if name not in ck.tensors:
            raise CheckpointError(f"{path}: missing tensor '{name}'")
        params.set_tensor(name, ck.tensors[name])
    a_mu, a_sig = [], []
    for k in range(config.network.n_layers):
        a_mu.append(ck.tensors[f"window.layer{k}.a_mu"])
        a_sig.append(ck.tensors[f"window.layer{k}.a_sig"])
    window = AdaptiveWindow(a_mu=a_mu, a_sig=a_sig)
    adam = None
    meta = ck.extra.get("adam")
    if meta:
        adam = AdamState(
            alpha=meta["alpha"], beta1=meta["beta1"], beta2=meta["beta2"],
            eps=meta["eps"], step=meta["step"],
        )
        for name in ck.tensors:
            if name.startswith("adam.m."):
                adam.m[name[len("adam.m."):]] = ck.tensors[name]
            elif name.startswith("adam.v."):
                adam.v[name[len("adam.v."):]] = ck.tensors[name]
    return LoadedModel(
        params=params, window=window, config=config, labels=ck.labels, adam=adam
    )
