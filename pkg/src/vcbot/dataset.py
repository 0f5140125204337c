"""Behavior primitives: the demo dataset, CSV persistence, and encoding.

The demo set is a re-drawn collection of seven 72-step limit cycles, sampled
at 100 ms, tracing the body parts of a macaw cub in the normalized workspace
(the original recordings are not published; this set matches their structure:
7 parts x 72 steps, clockwise, closed).  Files store one primitive per CSV
with header `x,y`, values in [-1, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import NetworkConfig
from .encoding import encode_positions
from .errors import DatasetError
from .training import TrainingSet

SAMPLING_MS = 100.0
DEMO_STEPS = 72
CATEGORIES = ["Eye", "Head", "Beak", "Neck", "Rwing", "Belly", "Lwing"]
CLOSURE_TOL = 0.1  # limit-cycle heuristic: last sample near the first


@dataclass
class PrimitiveSet:
    """Equal-length labeled cycles; positions is (S, T, dof)."""

    labels: list[str]
    positions: np.ndarray
    sampling_ms: float = SAMPLING_MS

    def __post_init__(self) -> None:
        if self.positions.ndim != 3:
            raise DatasetError("positions must be (sequences, steps, dof)")
        if len(self.labels) != self.positions.shape[0]:
            raise DatasetError("one label per sequence required")

    @property
    def steps(self) -> int:
        return self.positions.shape[1]

    def by_label(self, label: str) -> np.ndarray:
        return self.positions[self.labels.index(label)]

    def closed(self, tol: float = CLOSURE_TOL) -> list[bool]:
        gaps = np.linalg.norm(self.positions[:, -1] - self.positions[:, 0], axis=-1)
        return [bool(g <= tol) for g in gaps]


def _loop(
    center: tuple[float, float],
    rx: float,
    ry: float,
    rot_deg: float,
    wobble: float,
    phase: float,
    steps: int,
) -> np.ndarray:
    """Closed clockwise loop: a rotated ellipse with mild radius modulation."""
    s = np.arange(steps) * (2.0 * np.pi / steps)
    theta = phase - s  # decreasing angle = clockwise with y up
    m = 1.0 + wobble * np.sin(2.0 * theta + 0.7)
    x = rx * np.cos(theta) * m
    y = ry * np.sin(theta) * m
    rot = np.deg2rad(rot_deg)
    c, sn = np.cos(rot), np.sin(rot)
    return np.stack(
        [center[0] + c * x - sn * y, center[1] + sn * x + c * y], axis=-1
    )


_SHAPES = {
    # label: (center, rx, ry, rotation_deg, wobble, phase)
    "Eye": ((-0.16, 0.60), 0.06, 0.055, 0.0, 0.05, 1.2),
    "Head": ((-0.12, 0.52), 0.30, 0.27, 10.0, 0.06, 2.1),
    "Beak": ((-0.58, 0.40), 0.17, 0.11, -30.0, 0.10, 0.4),
    "Neck": ((0.14, 0.18), 0.22, 0.15, -20.0, 0.07, 3.0),
    "Rwing": ((0.60, -0.20), 0.30, 0.14, 55.0, 0.08, 5.1),
    "Belly": ((0.08, -0.48), 0.37, 0.30, 0.0, 0.05, 4.2),
    "Lwing": ((-0.50, -0.32), 0.27, 0.13, -50.0, 0.08, 0.9),
}


def macaw_cub_primitives(steps: int = DEMO_STEPS) -> PrimitiveSet:
    """The reconstructed demo set: seven clockwise cycles shaping a macaw cub."""
    positions = np.stack([_loop(*_SHAPES[label], steps) for label in CATEGORIES])
    return PrimitiveSet(labels=list(CATEGORIES), positions=positions)


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------


def export_primitives(pset: PrimitiveSet, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for label, rows in zip(pset.labels, pset.positions):
        path = directory / f"{label}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "y"])
            for x, y in rows:
                writer.writerow([f"{x:.10g}", f"{y:.10g}"])
        written.append(path)
    return written


def _load_one(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y"]:
            raise DatasetError(f"{path.name}: expected header x,y, got {header}")
        for i, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise DatasetError(f"{path.name} row {i}: expected 2 columns, got {len(row)}")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError as exc:
                raise DatasetError(f"{path.name} row {i}: non-numeric value") from exc
            if abs(x) > 1.0 or abs(y) > 1.0:
                raise DatasetError(
                    f"{path.name} row {i}: value outside workspace [-1, 1]"
                )
            rows.append((x, y))
    if len(rows) < 2:
        raise DatasetError(f"{path.name}: needs at least 2 rows, got {len(rows)}")
    return np.array(rows, dtype=np.float64)


def load_primitives(directory: str | Path, require_closed: bool = False) -> PrimitiveSet:
    """Load every `*.csv` in `directory` as one labeled primitive."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        raise DatasetError(f"no primitive CSV files found in {directory}")
    labels, arrays = [], []
    seen = set()
    for path in paths:
        label = path.stem
        if label.lower() in seen:
            raise DatasetError(f"duplicate primitive label '{label}'")
        seen.add(label.lower())
        labels.append(label)
        arrays.append(_load_one(path))
    lengths = {arr.shape[0] for arr in arrays}
    if len(lengths) != 1:
        raise DatasetError(f"primitives have mixed lengths {sorted(lengths)}")
    pset = PrimitiveSet(labels=labels, positions=np.stack(arrays))
    if require_closed:
        for label, ok in zip(pset.labels, pset.closed()):
            if not ok:
                raise DatasetError(
                    f"primitive '{label}' is not a closed cycle "
                    f"(endpoints more than {CLOSURE_TOL} apart)"
                )
    return pset


def encode_primitives(
    pset: PrimitiveSet, config: NetworkConfig, laps: int = 2
) -> TrainingSet:
    """Softmax-encode every primitive into a TrainingSet.

    Each cycle is tiled `laps` times so training supervises the lap-to-lap
    re-entry transition; with a single lap from the zero initial state the
    closed-loop dynamics never learn to stay on the cycle past its first
    period.
    """
    if pset.positions.shape[-1] != config.dof:
        raise DatasetError(
            f"primitives have {pset.positions.shape[-1]} dof, config wants {config.dof}"
        )
    if laps < 1:
        raise DatasetError(f"laps must be >= 1, got {laps}")
    positions = np.concatenate([pset.positions] * laps, axis=1)
    frames = encode_positions(positions, config.softmax_bins, config.sigma_enc)
    return TrainingSet(labels=list(pset.labels), positions=positions, frames=frames)
