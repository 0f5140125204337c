"""Forward computation of the hierarchical variational network.

Per layer k and step t, with leaky-integrator timescale iota_k:

    h_t = (1 - 1/iota) h_{t-1}
          + (1/iota) (W_rec d_{t-1} + W_bu d_below_{t-1} + W_td d_above_{t-1}
                      + W_zh z_t + b_h)
    d_t = tanh(h_t)

The latent z_t is drawn from a diagonal Gaussian whose statistics come from
either the prior head (generation) or the posterior head (inference), both
one-layer maps of the same layer's d_{t-1}.  The workspace output is decoded
from the lowest layer's d_t only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LOG_SIGMA_CLAMP, NetworkConfig
from .encoding import softmax
from .errors import ConfigError
from .params import LayerParams, NetworkParams


def sigma_from_rho(rho: np.ndarray) -> np.ndarray:
    """sigma = exp(rho), with rho clipped to +/- LOG_SIGMA_CLAMP for safety."""
    return np.exp(np.clip(rho, -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP))


def prior_stats(d_prev: np.ndarray, lp: LayerParams) -> tuple[np.ndarray, np.ndarray]:
    """Prior head: mu = tanh(W d + b), rho = W d + b (rho is log sigma)."""
    if d_prev.shape[-1] != lp.w_mu_p.shape[1]:
        raise ConfigError(
            f"prior head expects {lp.w_mu_p.shape[1]} d units, got {d_prev.shape[-1]}"
        )
    mu = np.tanh(d_prev @ lp.w_mu_p.T + lp.b_mu_p)
    rho = d_prev @ lp.w_sig_p.T + lp.b_sig_p
    return mu, rho


def posterior_stats(
    d_prev: np.ndarray,
    a_mu: np.ndarray,
    a_sig: np.ndarray,
    lp: LayerParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior head: like the prior head plus the per-step adaptation vectors."""
    if d_prev.shape[-1] != lp.w_mu_q.shape[1]:
        raise ConfigError(
            f"posterior head expects {lp.w_mu_q.shape[1]} d units, got {d_prev.shape[-1]}"
        )
    mu = np.tanh(d_prev @ lp.w_mu_q.T + a_mu + lp.b_mu_q)
    rho = d_prev @ lp.w_sig_q.T + a_sig + lp.b_sig_q
    return mu, rho


def sample_z(mu: np.ndarray, rho: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Reparameterized draw z = mu + exp(rho) * eps."""
    return mu + sigma_from_rho(rho) * eps


def context_step(
    h_prev: list[np.ndarray],
    d_prev: list[np.ndarray],
    z: list[np.ndarray],
    params: NetworkParams,
    config: NetworkConfig,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Advance all layers one step; neighbor terms are absent at the boundaries."""
    h_new, d_new = [], []
    for k, (lp, spec) in enumerate(zip(params.layers, config.layers)):
        pre = d_prev[k] @ lp.w_dh_rec.T + z[k] @ lp.w_zh.T + lp.b_h
        if lp.w_dh_bu is not None:
            pre = pre + d_prev[k - 1] @ lp.w_dh_bu.T
        if lp.w_dh_td is not None:
            pre = pre + d_prev[k + 1] @ lp.w_dh_td.T
        leak = 1.0 / spec.timescale
        h = (1.0 - leak) * h_prev[k] + leak * pre
        h_new.append(h)
        d_new.append(np.tanh(h))
    return h_new, d_new


def decode_output(d1: np.ndarray, params: NetworkParams) -> np.ndarray:
    """Map the lowest layer's d (..., d_1) to frames (..., dof, bins)."""
    dof, bins, d_units = params.w_out.shape
    o = d1 @ params.w_out.reshape(dof * bins, d_units).T + params.b_out.reshape(-1)
    o = o.reshape(*d1.shape[:-1], dof, bins)
    return softmax(o)


@dataclass
class LatentState:
    """Full per-layer state at one time step.

    `h`/`d` always present; distribution fields are None where the step was
    never computed through that path (e.g. anchors keep only h and d).
    """

    h: list[np.ndarray]
    d: list[np.ndarray]
    z: list[np.ndarray] | None = None
    eps: list[np.ndarray] | None = None
    mu_p: list[np.ndarray] | None = None
    rho_p: list[np.ndarray] | None = None
    mu_q: list[np.ndarray] | None = None
    rho_q: list[np.ndarray] | None = None

    def copy(self) -> "LatentState":
        cp = lambda xs: None if xs is None else [x.copy() for x in xs]
        return LatentState(
            h=cp(self.h), d=cp(self.d), z=cp(self.z), eps=cp(self.eps),
            mu_p=cp(self.mu_p), rho_p=cp(self.rho_p),
            mu_q=cp(self.mu_q), rho_q=cp(self.rho_q),
        )


def initial_state(config: NetworkConfig, batch_shape: tuple[int, ...] = ()) -> LatentState:
    """h_0 = 0 (so d_0 = 0) for every layer."""
    h = [np.zeros(batch_shape + (spec.d_units,)) for spec in config.layers]
    d = [np.zeros(batch_shape + (spec.d_units,)) for spec in config.layers]
    return LatentState(h=h, d=d)


@dataclass
class Rollout:
    """Struct-of-arrays record of a multi-step pass.

    Per-layer arrays are time-major, shape (T, ..., units).  Posterior fields
    are None for pure prior rollouts.  `init` is the state the pass started
    from; `outputs` holds the decoded frames, shape (T, ..., dof, bins).
    """

    init: LatentState
    h: list[np.ndarray]
    d: list[np.ndarray]
    z: list[np.ndarray]
    eps: list[np.ndarray]
    mu_p: list[np.ndarray]
    rho_p: list[np.ndarray]
    mu_q: list[np.ndarray] | None
    rho_q: list[np.ndarray] | None
    outputs: np.ndarray

    @property
    def steps(self) -> int:
        return self.outputs.shape[0]

    def state_at(self, t: int) -> LatentState:
        """Full state after step t (0-based within this rollout)."""
        pick = lambda arrs: [a[t].copy() for a in arrs]
        return LatentState(
            h=pick(self.h), d=pick(self.d), z=pick(self.z), eps=pick(self.eps),
            mu_p=pick(self.mu_p), rho_p=pick(self.rho_p),
            mu_q=None if self.mu_q is None else pick(self.mu_q),
            rho_q=None if self.rho_q is None else pick(self.rho_q),
        )


def _stack(layer_lists: list[list[np.ndarray]]) -> list[np.ndarray]:
    return [np.stack(per_layer) for per_layer in layer_lists]


def prior_step(
    state: LatentState,
    params: NetworkParams,
    config: NetworkConfig,
    eps: list[np.ndarray] | None = None,
) -> tuple[LatentState, np.ndarray]:
    """One closed-loop generation step from `state`; eps=None means zeros."""
    mu_p, rho_p, z = [], [], []
    for k, lp in enumerate(params.layers):
        mu, rho = prior_stats(state.d[k], lp)
        e = np.zeros_like(mu) if eps is None else eps[k]
        mu_p.append(mu)
        rho_p.append(rho)
        z.append(sample_z(mu, rho, e))
    h, d = context_step(state.h, state.d, z, params, config)
    new_state = LatentState(
        h=h, d=d, z=z,
        eps=[np.zeros_like(m) if eps is None else eps[k] for k, m in enumerate(mu_p)],
        mu_p=mu_p, rho_p=rho_p,
    )
    return new_state, decode_output(d[0], params)


def generate_prior(
    init: LatentState,
    steps: int,
    params: NetworkParams,
    config: NetworkConfig,
    eps_mode: str = "zeros",
    rng: np.random.Generator | None = None,
) -> Rollout:
    """Closed-loop rollout under the prior for `steps` >= 1 steps."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if eps_mode not in ("zeros", "sampled"):
        raise ValueError(f"eps_mode must be zeros|sampled, got {eps_mode}")
    if eps_mode == "sampled" and rng is None:
        rng = np.random.default_rng(config.seed)

    state = init
    hs: list[list[np.ndarray]] = [[] for _ in config.layers]
    ds = [[] for _ in config.layers]
    zs = [[] for _ in config.layers]
    es = [[] for _ in config.layers]
    mps = [[] for _ in config.layers]
    rps = [[] for _ in config.layers]
    outs = []
    batch_shape = state.d[0].shape[:-1]
    for _ in range(steps):
        eps = None
        if eps_mode == "sampled":
            eps = [
                rng.standard_normal(batch_shape + (spec.z_units,))
                for spec in config.layers
            ]
        state, frame = prior_step(state, params, config, eps)
        for k in range(config.n_layers):
            hs[k].append(state.h[k])
            ds[k].append(state.d[k])
            zs[k].append(state.z[k])
            es[k].append(state.eps[k])
            mps[k].append(state.mu_p[k])
            rps[k].append(state.rho_p[k])
        outs.append(frame)
    return Rollout(
        init=init, h=_stack(hs), d=_stack(ds), z=_stack(zs), eps=_stack(es),
        mu_p=_stack(mps), rho_p=_stack(rps), mu_q=None, rho_q=None,
        outputs=np.stack(outs),
    )


def posterior_rollout(
    init: LatentState,
    a_mu: list[np.ndarray],
    a_sig: list[np.ndarray],
    eps: list[np.ndarray],
    params: NetworkParams,
    config: NetworkConfig,
) -> Rollout:
    """Rollout under the posterior with given adaptation vectors and noise.

    `a_mu[k]`, `a_sig[k]`, `eps[k]` are time-major arrays (T, ..., z_k); the
    same T across layers.  Both prior and posterior statistics are recorded
    at every step so the divergence term can be evaluated later.
    """
    T = a_mu[0].shape[0]
    state = init
    hs: list[list[np.ndarray]] = [[] for _ in config.layers]
    ds = [[] for _ in config.layers]
    zs = [[] for _ in config.layers]
    mps = [[] for _ in config.layers]
    rps = [[] for _ in config.layers]
    mqs = [[] for _ in config.layers]
    rqs = [[] for _ in config.layers]
    outs = []
    h_prev, d_prev = state.h, state.d
    for t in range(T):
        z_t = []
        for k, lp in enumerate(params.layers):
            mu_p, rho_p = prior_stats(d_prev[k], lp)
            mu_q, rho_q = posterior_stats(d_prev[k], a_mu[k][t], a_sig[k][t], lp)
            z_t.append(sample_z(mu_q, rho_q, eps[k][t]))
            mps[k].append(mu_p)
            rps[k].append(rho_p)
            mqs[k].append(mu_q)
            rqs[k].append(rho_q)
        h_prev, d_prev = context_step(h_prev, d_prev, z_t, params, config)
        for k in range(config.n_layers):
            hs[k].append(h_prev[k])
            ds[k].append(d_prev[k])
            zs[k].append(z_t[k])
        outs.append(decode_output(d_prev[0], params))
    return Rollout(
        init=init, h=_stack(hs), d=_stack(ds), z=_stack(zs),
        eps=[e.copy() for e in eps],
        mu_p=_stack(mps), rho_p=_stack(rps), mu_q=_stack(mqs), rho_q=_stack(rqs),
        outputs=np.stack(outs),
    )
