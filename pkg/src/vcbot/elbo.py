"""Evidence lower bound and its two components.

    elbo = sum_t [ (1/n_x) sum_i sum_bins xbar log x
                   - sum_k (w_k/n_z) sum_units KL(q || p) ]

The first term scores the decoded frames against the encoded targets (the
target distribution is the reference in the cross-entropy); the second is
the Gaussian divergence between posterior and prior latents, weighted per
layer.  Training and online inference both minimize the negative of this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .network import Rollout, sigma_from_rho

_LOG_FLOOR = 1e-300  # guards log(0); softmax outputs are strictly positive anyway


def kl_gaussian(
    mu_q: np.ndarray, sigma_q: np.ndarray, mu_p: np.ndarray, sigma_p: np.ndarray
) -> np.ndarray:
    """Elementwise KL(q || p) between diagonal Gaussians; always >= 0."""
    sigma_q = np.asarray(sigma_q, dtype=np.float64)
    sigma_p = np.asarray(sigma_p, dtype=np.float64)
    if np.any(sigma_q <= 0) or np.any(sigma_p <= 0):
        raise ValueError("standard deviations must be positive")
    mu_q = np.asarray(mu_q, dtype=np.float64)
    mu_p = np.asarray(mu_p, dtype=np.float64)
    var_p = sigma_p * sigma_p
    return (
        np.log(sigma_p / sigma_q)
        + ((mu_p - mu_q) ** 2 + sigma_q * sigma_q) / (2.0 * var_p)
        - 0.5
    )


def categorical_kl(ref: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Elementwise-over-vectors KL(ref || out) for probability vectors (..., bins)."""
    ref = np.asarray(ref, dtype=np.float64)
    out = np.asarray(out, dtype=np.float64)
    ratio = np.where(ref > 0, ref / np.maximum(out, _LOG_FLOOR), 1.0)
    return np.sum(np.where(ref > 0, ref * np.log(ratio), 0.0), axis=-1)


@dataclass
class ElboParts:
    """Accuracy and regulation components; elbo = accuracy - regulation."""

    accuracy: float
    regulation: float

    @property
    def elbo(self) -> float:
        return self.accuracy - self.regulation

    @property
    def nelbo(self) -> float:
        return -self.elbo


def elbo_terms(
    targets: np.ndarray, rollout: Rollout, config: NetworkConfig
) -> ElboParts:
    """Evaluate both bound components for a posterior rollout.

    `targets` must match the rollout outputs' shape (T, ..., dof, bins); the
    sums run over time, degrees of freedom, bins, latent units, and any batch
    dimensions.
    """
    if rollout.mu_q is None:
        raise ValueError("elbo needs a posterior rollout (posterior stats missing)")
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != rollout.outputs.shape:
        raise ValueError(
            f"target shape {targets.shape} mismatches rollout {rollout.outputs.shape}"
        )
    logx = np.log(np.maximum(rollout.outputs, _LOG_FLOOR))
    accuracy = float(np.sum(targets * logx)) / config.n_x

    regulation = 0.0
    for k, w_k in enumerate(config.w):
        kl = kl_gaussian(
            rollout.mu_q[k],
            sigma_from_rho(rollout.rho_q[k]),
            rollout.mu_p[k],
            sigma_from_rho(rollout.rho_p[k]),
        )
        regulation += (w_k / config.n_z) * float(np.sum(kl))
    return ElboParts(accuracy=accuracy, regulation=regulation)


def reconstruction_error(targets: np.ndarray, outputs: np.ndarray) -> float:
    """Summed categorical KL between encoded references and decoded outputs."""
    return float(np.sum(categorical_kl(targets, outputs)))
