"""Trainable tensors of the hierarchical network.

Weight matrices are stored (out_units, in_units); forward passes compute
`x @ W.T + b` so leading batch dimensions broadcast.  Maps to nonexistent
neighbor layers (below the lowest, above the highest) are simply absent and
treated as structurally zero everywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from .config import NetworkConfig
from .errors import ConfigError


@dataclass
class LayerParams:
    """Per-layer tensors: context maps, stochastic injection, distribution heads."""

    w_dh_rec: np.ndarray  # (d_k, d_k) recurrent map
    w_dh_bu: np.ndarray | None  # (d_k, d_{k-1}) bottom-up map, None at lowest layer
    w_dh_td: np.ndarray | None  # (d_k, d_{k+1}) top-down map, None at highest layer
    w_zh: np.ndarray  # (d_k, z_k) stochastic injection
    b_h: np.ndarray  # (d_k,)
    w_mu_p: np.ndarray  # (z_k, d_k) prior mean head
    b_mu_p: np.ndarray  # (z_k,)
    w_sig_p: np.ndarray  # (z_k, d_k) prior log-sigma head
    b_sig_p: np.ndarray  # (z_k,)
    w_mu_q: np.ndarray  # (z_k, d_k) posterior mean head
    b_mu_q: np.ndarray  # (z_k,)
    w_sig_q: np.ndarray  # (z_k, d_k) posterior log-sigma head
    b_sig_q: np.ndarray  # (z_k,)


@dataclass
class NetworkParams:
    """All trainable tensors: per-layer blocks plus the output head.

    The output head reads only the lowest layer's deterministic state:
    w_out is (dof, bins, d_1), b_out is (dof, bins).
    """

    layers: list[LayerParams]
    w_out: np.ndarray
    b_out: np.ndarray

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        """Deterministic (name, array) iteration over every trainable tensor."""
        for k, lp in enumerate(self.layers):
            for f in fields(LayerParams):
                arr = getattr(lp, f.name)
                if arr is not None:
                    yield f"layer{k}.{f.name}", arr
        yield "out.w_out", self.w_out
        yield "out.b_out", self.b_out

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        scope, attr = name.split(".", 1)
        if scope == "out":
            setattr(self, attr, value)
        else:
            setattr(self.layers[int(scope[len("layer"):])], attr, value)

    def copy(self) -> "NetworkParams":
        out = zeros_like(self)
        for name, arr in self.named_tensors():
            out.set_tensor(name, arr.copy())
        return out

    def content_hash(self) -> str:
        """SHA-256 over all tensor bytes in iteration order."""
        h = hashlib.sha256()
        for name, arr in self.named_tensors():
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


def _uniform(rng: np.random.Generator, out_units: int, in_units: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(in_units)
    return rng.uniform(-bound, bound, size=(out_units, in_units))


def init_params(config: NetworkConfig, rng: np.random.Generator | None = None) -> NetworkParams:
    """Scaled-uniform weights (+/- 1/sqrt(fan_in)), zero biases."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    layers = []
    specs = config.layers
    for k, spec in enumerate(specs):
        d, z = spec.d_units, spec.z_units
        below = specs[k - 1].d_units if k > 0 else None
        above = specs[k + 1].d_units if k < len(specs) - 1 else None
        layers.append(
            LayerParams(
                w_dh_rec=_uniform(rng, d, d),
                w_dh_bu=_uniform(rng, d, below) if below is not None else None,
                w_dh_td=_uniform(rng, d, above) if above is not None else None,
                w_zh=_uniform(rng, d, z),
                b_h=np.zeros(d),
                w_mu_p=_uniform(rng, z, d),
                b_mu_p=np.zeros(z),
                w_sig_p=_uniform(rng, z, d),
                b_sig_p=np.zeros(z),
                w_mu_q=_uniform(rng, z, d),
                b_mu_q=np.zeros(z),
                w_sig_q=_uniform(rng, z, d),
                b_sig_q=np.zeros(z),
            )
        )
    d1 = specs[0].d_units
    w_out = _uniform(rng, config.dof * config.softmax_bins, d1).reshape(
        config.dof, config.softmax_bins, d1
    )
    b_out = np.zeros((config.dof, config.softmax_bins))
    return NetworkParams(layers=layers, w_out=w_out, b_out=b_out)


def zeros_like(params: NetworkParams) -> NetworkParams:
    """Same structure, all tensors zero; used for gradient accumulators."""
    layers = []
    for lp in params.layers:
        kwargs = {}
        for f in fields(LayerParams):
            arr = getattr(lp, f.name)
            kwargs[f.name] = None if arr is None else np.zeros_like(arr)
        layers.append(LayerParams(**kwargs))
    return NetworkParams(
        layers=layers,
        w_out=np.zeros_like(params.w_out),
        b_out=np.zeros_like(params.b_out),
    )


def tie_posterior_to_prior(params: NetworkParams) -> None:
    """Copy prior-head tensors onto the posterior heads (test fixture helper)."""
    for lp in params.layers:
        lp.w_mu_q = lp.w_mu_p.copy()
        lp.b_mu_q = lp.b_mu_p.copy()
        lp.w_sig_q = lp.w_sig_p.copy()
        lp.b_sig_q = lp.b_sig_p.copy()


def check_shapes(params: NetworkParams, config: NetworkConfig) -> None:
    """Raise ConfigError when tensor shapes disagree with the architecture."""
    specs = config.layers
    if len(params.layers) != len(specs):
        raise ConfigError("layer count mismatch between params and config")
    for k, (lp, spec) in enumerate(zip(params.layers, specs)):
        d, z = spec.d_units, spec.z_units
        expected = {
            "w_dh_rec": (d, d),
            "w_zh": (d, z),
            "b_h": (d,),
            "w_mu_p": (z, d),
            "b_mu_p": (z,),
            "w_sig_p": (z, d),
            "b_sig_p": (z,),
            "w_mu_q": (z, d),
            "b_mu_q": (z,),
            "w_sig_q": (z, d),
            "b_sig_q": (z,),
        }
        if k > 0:
            expected["w_dh_bu"] = (d, specs[k - 1].d_units)
        if k < len(specs) - 1:
            expected["w_dh_td"] = (d, specs[k + 1].d_units)
        for name, shape in expected.items():
            arr = getattr(lp, name)
            if arr is None or arr.shape != shape:
                got = None if arr is None else arr.shape
                raise ConfigError(f"layer {k} tensor {name}: expected {shape}, got {got}")
        if k == 0 and lp.w_dh_bu is not None:
            raise ConfigError("lowest layer must not have a bottom-up map")
        if k == len(specs) - 1 and lp.w_dh_td is not None:
            raise ConfigError("highest layer must not have a top-down map")
    if params.w_out.shape != (config.dof, config.softmax_bins, specs[0].d_units):
        raise ConfigError(f"output head shape {params.w_out.shape} mismatches config")
    if params.b_out.shape != (config.dof, config.softmax_bins):
        raise ConfigError(f"output bias shape {params.b_out.shape} mismatches config")
