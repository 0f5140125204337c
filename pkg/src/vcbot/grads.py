"""Hand-written backpropagation through time for the network's loss.

The loss is the negative evidence lower bound of a posterior rollout; the
backward pass differentiates exactly the forward computation recorded in the
Rollout (same adaptation vectors, same stored noise draws).  Gradients flow
through four paths out of each step's deterministic state d_t: the output
head at t, both distribution heads at t+1, and the context maps (recurrent,
bottom-up, top-down) at t+1.  Terms involving neighbor layers that do not
exist are structurally zero.

The log-sigma clamp used in the forward pass is treated as pass-through
here; gradient checks keep log-sigma well inside the clamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .elbo import ElboParts, elbo_terms
from .errors import WindowError
from .network import Rollout, sigma_from_rho
from .params import NetworkParams, zeros_like


@dataclass
class BpttResult:
    param_grads: NetworkParams  # same structure as the params, holding dLoss/dtheta
    a_mu_grads: list[np.ndarray]  # per layer (T, ..., z_k)
    a_sig_grads: list[np.ndarray]
    parts: ElboParts


def _outer(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Batched outer product summed over leading dims: (..., m), (..., n) -> (m, n)."""
    gm = g.reshape(-1, g.shape[-1])
    xm = x.reshape(-1, x.shape[-1])
    return gm.T @ xm


def _sum_leading(g: np.ndarray) -> np.ndarray:
    return g.reshape(-1, g.shape[-1]).sum(axis=0)


def bptt_gradients(
    targets: np.ndarray,
    rollout: Rollout,
    params: NetworkParams,
    config: NetworkConfig,
) -> BpttResult:
    """Gradients of the loss (-ELBO) w.r.t. every tensor and adaptation vector."""
    if rollout.mu_q is None or rollout.eps is None:
        raise WindowError("gradient replay needs a posterior rollout with stored eps")
    parts = elbo_terms(targets, rollout, config)

    K = config.n_layers
    T = rollout.steps
    leaks = [1.0 / spec.timescale for spec in config.layers]
    n_z = config.n_z
    grads = zeros_like(params)
    ga_mu = [np.zeros_like(rollout.eps[k]) for k in range(K)]
    ga_sig = [np.zeros_like(rollout.eps[k]) for k in range(K)]

    dof, bins, d1_units = params.w_out.shape
    w_out_2d = params.w_out.reshape(dof * bins, d1_units)
    # dLoss/do per step: (x - xbar) / n_x
    go_all = (rollout.outputs - np.asarray(targets, dtype=np.float64)) / config.n_x

    carry_d = [np.zeros_like(rollout.d[k][0]) for k in range(K)]
    gh_next = [np.zeros_like(rollout.d[k][0]) for k in range(K)]

    for t in range(T - 1, -1, -1):
        d_prev = [
            rollout.d[k][t - 1] if t > 0 else rollout.init.d[k] for k in range(K)
        ]

        # Output-head contribution enters the lowest layer's d at the same step.
        go = go_all[t]
        go_flat = go.reshape(*go.shape[:-2], dof * bins)
        grads.w_out += _outer(go_flat, rollout.d[0][t]).reshape(dof, bins, d1_units)
        grads.b_out += _sum_leading(go_flat).reshape(dof, bins)

        gh = []
        for k in range(K):
            gd = carry_d[k]
            if k == 0:
                gd = gd + go_flat @ w_out_2d
            gh_k = gd * (1.0 - rollout.d[k][t] ** 2) + (1.0 - leaks[k]) * gh_next[k]
            gh.append(gh_k)

        new_carry = [np.zeros_like(c) for c in carry_d]
        for k, lp in enumerate(params.layers):
            leak = leaks[k]
            w_k = config.w[k]
            mu_p, mu_q = rollout.mu_p[k][t], rollout.mu_q[k][t]
            sig_p = sigma_from_rho(rollout.rho_p[k][t])
            sig_q = sigma_from_rho(rollout.rho_q[k][t])
            var_p = sig_p * sig_p

            gz = leak * (gh[k] @ lp.w_zh)
            kl_scale = w_k / n_z
            gmu_q = gz + kl_scale * (mu_q - mu_p) / var_p
            grho_q = gz * sig_q * rollout.eps[k][t] + kl_scale * (
                sig_q * sig_q / var_p - 1.0
            )
            gmu_p = kl_scale * (mu_p - mu_q) / var_p
            grho_p = kl_scale * (1.0 - ((mu_q - mu_p) ** 2 + sig_q * sig_q) / var_p)

            tq = (1.0 - mu_q * mu_q) * gmu_q  # through tanh of the posterior mean
            tp = (1.0 - mu_p * mu_p) * gmu_p
            ga_mu[k][t] = tq
            ga_sig[k][t] = grho_q

            glp = grads.layers[k]
            glp.w_dh_rec += leak * _outer(gh[k], d_prev[k])
            glp.b_h += leak * _sum_leading(gh[k])
            glp.w_zh += leak * _outer(gh[k], rollout.z[k][t])
            if lp.w_dh_bu is not None:
                glp.w_dh_bu += leak * _outer(gh[k], d_prev[k - 1])
            if lp.w_dh_td is not None:
                glp.w_dh_td += leak * _outer(gh[k], d_prev[k + 1])
            glp.w_mu_p += _outer(tp, d_prev[k])
            glp.b_mu_p += _sum_leading(tp)
            glp.w_sig_p += _outer(grho_p, d_prev[k])
            glp.b_sig_p += _sum_leading(grho_p)
            glp.w_mu_q += _outer(tq, d_prev[k])
            glp.b_mu_q += _sum_leading(tq)
            glp.w_sig_q += _outer(grho_q, d_prev[k])
            glp.b_sig_q += _sum_leading(grho_q)

            # Flow into the previous step's d states.
            new_carry[k] += leak * (gh[k] @ lp.w_dh_rec)
            if lp.w_dh_bu is not None:
                new_carry[k - 1] += leak * (gh[k] @ lp.w_dh_bu)
            if lp.w_dh_td is not None:
                new_carry[k + 1] += leak * (gh[k] @ lp.w_dh_td)
            new_carry[k] += tp @ lp.w_mu_p + grho_p @ lp.w_sig_p
            new_carry[k] += tq @ lp.w_mu_q + grho_q @ lp.w_sig_q

        carry_d = new_carry
        gh_next = gh

    return BpttResult(
        param_grads=grads, a_mu_grads=ga_mu, a_sig_grads=ga_sig, parts=parts
    )


@dataclass
class GradCheckRow:
    name: str
    max_abs_err: float
    max_rel_err: float
    ok: bool


def gradient_check(
    config: NetworkConfig,
    steps: int = 4,
    seed: int = 0,
    rtol: float = 1e-4,
    atol: float = 1e-6,
    fd_step: float = 1e-4,
) -> tuple[bool, list[GradCheckRow]]:
    """Compare every analytic gradient against central finite differences.

    Randomizes parameters, adaptation vectors, noise, and targets, then walks
    every scalar (all weight/bias tensors plus the per-step adaptation
    vectors).  Passes when |analytic - fd| <= atol + rtol * |fd| everywhere.
    """
    from .network import initial_state, posterior_rollout
    from .params import init_params

    rng = np.random.default_rng(seed)
    params = init_params(config, rng)
    a_mu = [rng.normal(0, 0.3, (steps, s.z_units)) for s in config.layers]
    a_sig = [rng.normal(0, 0.3, (steps, s.z_units)) for s in config.layers]
    eps = [rng.standard_normal((steps, s.z_units)) for s in config.layers]
    targets = rng.dirichlet(
        np.ones(config.softmax_bins), size=(steps, config.dof)
    )
    init = initial_state(config)

    def loss() -> float:
        rollout = posterior_rollout(init, a_mu, a_sig, eps, params, config)
        return elbo_terms(targets, rollout, config).nelbo

    rollout = posterior_rollout(init, a_mu, a_sig, eps, params, config)
    result = bptt_gradients(targets, rollout, params, config)
    analytic = dict(result.param_grads.named_tensors())
    for k in range(config.n_layers):
        analytic[f"a_mu.layer{k}"] = result.a_mu_grads[k]
        analytic[f"a_sig.layer{k}"] = result.a_sig_grads[k]
    tensors = dict(params.named_tensors())
    for k in range(config.n_layers):
        tensors[f"a_mu.layer{k}"] = a_mu[k]
        tensors[f"a_sig.layer{k}"] = a_sig[k]

    rows: list[GradCheckRow] = []
    all_ok = True
    for name, arr in tensors.items():
        grad = analytic[name]
        max_abs = 0.0
        max_rel = 0.0
        ok = True
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            saved = arr[idx]
            arr[idx] = saved + fd_step
            up = loss()
            arr[idx] = saved - fd_step
            down = loss()
            arr[idx] = saved
            fd = (up - down) / (2.0 * fd_step)
            err = abs(grad[idx] - fd)
            max_abs = max(max_abs, err)
            if abs(fd) > 0:
                max_rel = max(max_rel, err / abs(fd))
            if err > atol + rtol * abs(fd):
                ok = False
        rows.append(GradCheckRow(name, max_abs, max_rel, ok))
        all_ok = all_ok and ok
    return all_ok, rows


def global_norm(grads: NetworkParams, a_grads: list[np.ndarray] | None = None) -> float:
    """L2 norm across every gradient tensor (and adaptation gradients if given)."""
    total = 0.0
    for _, arr in grads.named_tensors():
        total += float(np.sum(arr * arr))
    if a_grads is not None:
        for arr in a_grads:
            total += float(np.sum(arr * arr))
    return float(np.sqrt(total))
