"""Real-time deliberation: sliding-window inference and shared-control mixing.

The live loop keeps a window of the last `size` observed frames together with
one pair of adaptation vectors per (step, layer) and the latent state at the
window's left edge (the anchor).  Online inference repeatedly rolls the
posterior from the anchor across the window, backpropagates the negative
bound, and takes plain gradient steps on the adaptation vectors only; network
weights are never touched.  Sliding advances the anchor one posterior step
and drops the leftmost frame and vectors.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import WORKSPACE_LIMIT, MixerConfig, NetworkConfig
from .elbo import elbo_terms
from .errors import WindowError
from .grads import bptt_gradients
from .network import LatentState, Rollout, initial_state, posterior_rollout
from .params import NetworkParams

log = logging.getLogger(__name__)


def mix_control(
    human: np.ndarray | None,
    robot: np.ndarray,
    prev_mixed: np.ndarray | None,
    mixer: MixerConfig,
) -> np.ndarray:
    """Blend intentions and saturate the per-tick rate of change.

    `human` is None while the control key is not held; the robot intention
    passes through untouched then.  The first tick (prev_mixed None) places
    the effector directly at the target.  The result never leaves the
    workspace and never moves more than rate_cap per coordinate per tick.
    """
    robot = np.asarray(robot, dtype=np.float64)
    if human is None:
        target = robot
    else:
        human = np.asarray(human, dtype=np.float64)
        target = mixer.gamma * human + (1.0 - mixer.gamma) * robot
    if prev_mixed is None:
        return np.clip(target, -WORKSPACE_LIMIT, WORKSPACE_LIMIT)
    delta = np.clip(target - prev_mixed, -mixer.rate_cap, mixer.rate_cap)
    return np.clip(prev_mixed + delta, -WORKSPACE_LIMIT, WORKSPACE_LIMIT)


@dataclass
class SlidingWindow:
    """Window buffers: observed frames, adaptation vectors, stored noise."""

    size: int
    anchor: LatentState  # state at the step preceding frames[0]
    frames: list[np.ndarray] = field(default_factory=list)  # each (dof, bins)
    a_mu: list[list[np.ndarray]] = field(default_factory=list)  # [layer][step] (z,)
    a_sig: list[list[np.ndarray]] = field(default_factory=list)
    eps: list[list[np.ndarray]] = field(default_factory=list)
    cached: Rollout | None = None  # posterior rollout valid for current buffers

    @property
    def filled(self) -> int:
        return len(self.frames)

    @property
    def full(self) -> bool:
        return len(self.frames) >= self.size

    def append(
        self, frame: np.ndarray, eps: list[np.ndarray]
    ) -> None:
        """Add the newest observation with zeroed adaptation vectors."""
        if self.full:
            raise WindowError("window already full; slide before appending")
        self.frames.append(np.asarray(frame, dtype=np.float64))
        for k, e in enumerate(eps):
            self.a_mu[k].append(np.zeros_like(e))
            self.a_sig[k].append(np.zeros_like(e))
            self.eps[k].append(np.asarray(e, dtype=np.float64))
        self.cached = None

    def slide(self, new_anchor: LatentState) -> None:
        """Drop the leftmost step; its effect is frozen into the new anchor."""
        if not self.frames:
            raise WindowError("cannot slide an empty window")
        self.frames.pop(0)
        for k in range(len(self.a_mu)):
            self.a_mu[k].pop(0)
            self.a_sig[k].pop(0)
            self.eps[k].pop(0)
        self.anchor = LatentState(
            h=[h.copy() for h in new_anchor.h], d=[d.copy() for d in new_anchor.d]
        )
        self.cached = None

    def stacked(self) -> tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]]:
        a_mu = [np.stack(per_layer) for per_layer in self.a_mu]
        a_sig = [np.stack(per_layer) for per_layer in self.a_sig]
        eps = [np.stack(per_layer) for per_layer in self.eps]
        return a_mu, a_sig, eps

    def targets(self) -> np.ndarray:
        return np.stack(self.frames)

    def posterior(self, params: NetworkParams, config: NetworkConfig) -> Rollout:
        """Posterior rollout from the anchor across the buffered steps (cached)."""
        if not self.frames:
            raise WindowError("empty window has no rollout")
        if self.cached is None:
            a_mu, a_sig, eps = self.stacked()
            self.cached = posterior_rollout(
                self.anchor, a_mu, a_sig, eps, params, config
            )
        return self.cached


def reset_session(config: NetworkConfig, window_size: int) -> SlidingWindow:
    """Fresh window: zero anchor state, empty buffers, zeroed vectors."""
    K = config.n_layers
    return SlidingWindow(
        size=window_size,
        anchor=initial_state(config),
        a_mu=[[] for _ in range(K)],
        a_sig=[[] for _ in range(K)],
        eps=[[] for _ in range(K)],
    )


@dataclass
class InferenceResult:
    nelbo: float
    epochs_run: int
    left_state: LatentState  # post-update context at the window's first step
    end_state: LatentState  # post-update context at the window's last step


MAX_BACKTRACKS = 8


def infer_window(
    window: SlidingWindow,
    params: NetworkParams,
    config: NetworkConfig,
    n_epochs: int,
    rate: float,
    budget_s: float | None = None,
) -> InferenceResult:
    """Adapt the window's vectors by gradient descent on the negative bound.

    Each epoch takes a plain gradient step at `rate`, halving the step (up to
    MAX_BACKTRACKS times) whenever it would increase the loss, so the bound
    is non-increasing epoch over epoch even where the window landscape is
    stiff.  Runs up to `n_epochs` passes, stopping early when `budget_s`
    seconds have elapsed or no halved step improves anymore.  With n_epochs=0
    the buffers are untouched and only the bound is evaluated.  A non-finite
    loss resets the window's vectors to zero and continues.  Network weights
    are read-only throughout.
    """
    start = time.perf_counter()
    rollout = window.posterior(params, config)
    targets = window.targets()
    nelbo = float(elbo_terms(targets, rollout, config).nelbo)
    if not np.isfinite(nelbo):
        log.warning("non-finite window loss; resetting adaptation vectors")
        _zero_vectors(window)
        rollout = window.posterior(params, config)
        nelbo = float(elbo_terms(targets, rollout, config).nelbo)
    epochs_run = 0
    for _ in range(n_epochs):
        if budget_s is not None and time.perf_counter() - start >= budget_s:
            break
        result = bptt_gradients(targets, rollout, params, config)
        saved_mu = [[a.copy() for a in per_layer] for per_layer in window.a_mu]
        saved_sig = [[a.copy() for a in per_layer] for per_layer in window.a_sig]
        step = rate
        improved = False
        for _ in range(MAX_BACKTRACKS + 1):
            for k in range(config.n_layers):
                for t in range(window.filled):
                    window.a_mu[k][t] = saved_mu[k][t] - step * result.a_mu_grads[k][t]
                    window.a_sig[k][t] = saved_sig[k][t] - step * result.a_sig_grads[k][t]
            window.cached = None
            trial_rollout = window.posterior(params, config)
            trial = float(elbo_terms(targets, trial_rollout, config).nelbo)
            if np.isfinite(trial) and trial <= nelbo:
                rollout, nelbo, improved = trial_rollout, trial, True
                break
            step *= 0.5
        if not improved:
            # restore and stop: the gradient no longer yields a usable step
            for k in range(config.n_layers):
                for t in range(window.filled):
                    window.a_mu[k][t] = saved_mu[k][t]
                    window.a_sig[k][t] = saved_sig[k][t]
            window.cached = None
            rollout = window.posterior(params, config)
            break
        epochs_run += 1
    return InferenceResult(
        nelbo=float(nelbo),
        epochs_run=epochs_run,
        left_state=LatentState(
            h=[h[0].copy() for h in rollout.h], d=[d[0].copy() for d in rollout.d]
        ),
        end_state=rollout.state_at(window.filled - 1),
    )


def _zero_vectors(window: SlidingWindow) -> None:
    for k in range(len(window.a_mu)):
        for t in range(window.filled):
            window.a_mu[k][t][:] = 0.0
            window.a_sig[k][t][:] = 0.0
    window.cached = None
