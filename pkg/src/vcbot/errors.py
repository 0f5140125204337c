"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad shapes, out-of-range values, unknown keys."""


class DatasetError(ValueError):
    """Invalid trajectory data: bad files, out-of-range samples, duplicates."""


class CheckpointError(RuntimeError):
    """Unreadable checkpoint: bad magic, version mismatch, truncation."""


class WindowError(RuntimeError):
    """Sliding-window bookkeeping violated (missing step, replay mismatch)."""


class DivergenceError(RuntimeError):
    """Optimization produced non-finite values."""
