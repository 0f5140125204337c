"""Configuration types and strict JSON persistence.

A RunConfig aggregates everything a run needs: the network architecture,
the control mixer, the sliding-window inference settings, training
hyperparameters, the observer shape, and session bookkeeping.  Loading is
strict: unknown keys are rejected so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

WORKSPACE_LIMIT = 1.0  # positions live in [-1, 1] per coordinate
LOG_SIGMA_CLAMP = 7.0  # log-sigma clipped to +/- this before exponentiation


@dataclass
class LayerSpec:
    """One hierarchy level: deterministic units, stochastic units, timescale."""

    d_units: int
    z_units: int
    timescale: float

    def validate(self) -> None:
        if self.d_units < 1:
            raise ConfigError(f"d_units must be >= 1, got {self.d_units}")
        if self.z_units < 1:
            raise ConfigError(f"z_units must be >= 1, got {self.z_units}")
        if self.timescale < 1.0:
            raise ConfigError(f"timescale must be >= 1, got {self.timescale}")


@dataclass
class NetworkConfig:
    """Architecture of the hierarchical network.

    Layers are ordered fastest (lowest) to slowest (highest); timescales must
    be non-decreasing along that order.  `w` is the per-layer regulation
    weight scaling the KL term of the evidence lower bound.
    """

    layers: list[LayerSpec]
    dof: int = 2
    softmax_bins: int = 16
    sigma_enc: float = 0.08
    w: list[float] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        self.layers = [
            LayerSpec(**ls) if isinstance(ls, dict) else ls for ls in self.layers
        ]
        if not self.w:
            self.w = [0.1] * len(self.layers)
        self.validate()

    def validate(self) -> None:
        if len(self.layers) < 1:
            raise ConfigError("need at least one layer")
        for spec in self.layers:
            spec.validate()
        scales = [spec.timescale for spec in self.layers]
        if any(b < a for a, b in zip(scales, scales[1:])):
            raise ConfigError(f"timescales must be non-decreasing, got {scales}")
        if self.dof < 1:
            raise ConfigError(f"dof must be >= 1, got {self.dof}")
        if self.softmax_bins < 2:
            raise ConfigError(f"softmax_bins must be >= 2, got {self.softmax_bins}")
        if self.sigma_enc <= 0:
            raise ConfigError(f"sigma_enc must be > 0, got {self.sigma_enc}")
        if len(self.w) != len(self.layers):
            raise ConfigError("w must have one entry per layer")
        if any(wk < 0 for wk in self.w):
            raise ConfigError(f"regulation weights must be >= 0, got {self.w}")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_z(self) -> int:
        return sum(spec.z_units for spec in self.layers)

    @property
    def n_x(self) -> int:
        return self.dof


@dataclass
class MixerConfig:
    """Shared-control mixing: human weight and per-tick rate saturation."""

    gamma: float = 0.9
    rate_cap: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.rate_cap <= 0.0:
            raise ConfigError(f"rate_cap must be > 0, got {self.rate_cap}")


@dataclass
class WindowConfig:
    """Sliding-window inference settings for the live session."""

    size: int = 15
    n_epochs: int = 30
    rate: float = 0.1
    budget_ms: float = 60.0
    eps_mode: str = "zeros"  # "zeros" or "sampled" for online rollouts

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ConfigError(f"window size must be >= 1, got {self.size}")
        if self.n_epochs < 0:
            raise ConfigError(f"n_epochs must be >= 0, got {self.n_epochs}")
        if self.rate <= 0:
            raise ConfigError(f"rate must be > 0, got {self.rate}")
        if self.budget_ms <= 0:
            raise ConfigError(f"budget_ms must be > 0, got {self.budget_ms}")
        if self.eps_mode not in ("zeros", "sampled"):
            raise ConfigError(f"eps_mode must be zeros|sampled, got {self.eps_mode}")


@dataclass
class TrainingConfig:
    """Offline optimization settings."""

    epochs: int = 5000
    report_every: int = 1
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    grad_clip: float = 10.0  # global-norm clip; <= 0 disables

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.report_every < 1:
            raise ConfigError(f"report_every must be >= 1, got {self.report_every}")


@dataclass
class ObserverConfig:
    """Feed-forward intent classifier shape and training settings."""

    hidden: list[int] = field(default_factory=lambda: [150, 100])
    buffer_steps: int = 5
    rollout_steps: int = 200
    discard_steps: int = 20
    epochs: int = 2000
    test_noise: float = 0.02
    congruence_y: int = 10
    event_gap: int = 10  # ticks of inactivity that close an intervention event

    def __post_init__(self) -> None:
        if self.buffer_steps < 1:
            raise ConfigError("buffer_steps must be >= 1")
        if self.rollout_steps <= self.discard_steps + self.buffer_steps:
            raise ConfigError("rollout_steps too short for the discard/buffer span")
        if self.congruence_y < 1:
            raise ConfigError("congruence_y must be >= 1")


@dataclass
class SessionConfig:
    """Live-session bookkeeping.

    `start_primitive` names the learned behavior whose posterior opening
    context seeds the session (None starts from the neutral zero context).
    """

    total_ticks: int = 2000
    tick_ms: float = 100.0
    start_primitive: str | None = None

    def __post_init__(self) -> None:
        if self.total_ticks < 1:
            raise ConfigError("total_ticks must be >= 1")
        if self.tick_ms <= 0:
            raise ConfigError("tick_ms must be > 0")


@dataclass
class RunConfig:
    """Everything a run needs, with all defaults materialized."""

    network: NetworkConfig = field(default_factory=lambda: demo_network_config())
    mixer: MixerConfig = field(default_factory=MixerConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    seed: int = 7

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Stable content hash of the fully materialized config."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def demo_network_config() -> NetworkConfig:
    """Two-level demo architecture: fast 40d/4z at timescale 2, slow 10d/1z at 10."""
    return NetworkConfig(
        layers=[LayerSpec(40, 4, 2.0), LayerSpec(10, 1, 10.0)],
        dof=2,
        softmax_bins=16,
        sigma_enc=0.08,
    )


_SECTION_TYPES = {
    "network": NetworkConfig,
    "mixer": MixerConfig,
    "window": WindowConfig,
    "training": TrainingConfig,
    "observer": ObserverConfig,
    "session": SessionConfig,
}


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path}' must be an object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}' in section '{path}'")
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a plain dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    allowed = set(_SECTION_TYPES) | {"seed"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}' at config root")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise ConfigError("seed must be an integer")
        kwargs["seed"] = data["seed"]
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON config file; every key is validated."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: RunConfig, path: str | Path) -> None:
    """Write the config with all defaults materialized; round-trip stable."""
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
