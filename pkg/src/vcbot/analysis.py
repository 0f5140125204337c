"""Post-session and post-training analysis: confusion, congruence, latent PCA."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .encoding import decode_frames
from .observer import (
    ObserverNet,
    classify,
    congruence_probability,
    pca_latent,
    segment_events,
)
from .session import TickRecord
from .training import AdaptiveWindow, regenerate
from .params import NetworkParams


def rollout_positions_by_label(
    params: NetworkParams,
    window: AdaptiveWindow,
    config: RunConfig,
    labels: list[str],
    steps: int,
    noise: float = 0.0,
    eps_mode: str = "zeros",
    rng: np.random.Generator | None = None,
) -> dict[str, np.ndarray]:
    """Closed-loop generation per learned behavior, decoded to positions.

    eps_mode "sampled" draws the generation's latent noise from the prior
    (natural variability for observer training data); optional Gaussian
    positional noise models hand-traced test data.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    regen = regenerate(
        params, window, config.network, steps, eps_mode=eps_mode, rng=rng
    )
    decoded = decode_frames(regen.outputs)  # (steps, S, dof)
    out = {}
    for s, label in enumerate(labels):
        pos = decoded[:, s, :]
        if noise > 0.0:
            pos = pos + rng.normal(0.0, noise, size=pos.shape)
        out[label] = pos
    return out


def high_layer_states(
    params: NetworkParams,
    window: AdaptiveWindow,
    config: RunConfig,
    steps: int,
) -> np.ndarray:
    """Highest-layer d states of a regeneration pass, (steps, S, d_K)."""
    regen = regenerate(params, window, config.network, steps)
    return regen.d[-1]


# ---------------------------------------------------------------------------
# Stream classification over session records
# ---------------------------------------------------------------------------


def classify_stream(
    positions: list[np.ndarray | None], net: ObserverNet
) -> list[int | None]:
    """Label each step from the trailing buffer of contiguous positions.

    A None position breaks contiguity; classification resumes once the buffer
    refills (first `buffer_steps - 1` steps of every run stay unlabeled).
    """
    labels: list[int | None] = []
    buffer: list[np.ndarray] = []
    for pos in positions:
        if pos is None:
            buffer.clear()
            labels.append(None)
            continue
        buffer.append(np.asarray(pos, dtype=np.float64))
        if len(buffer) > net.buffer_steps:
            buffer.pop(0)
        if len(buffer) < net.buffer_steps:
            labels.append(None)
        else:
            result = classify(np.stack(buffer), net)
            labels.append(None if result is None else result.index)
    return labels


@dataclass
class CongruenceRow:
    t: int
    event: int
    c: int | None
    p: float | None


def congruence_series(
    records: list[TickRecord], net: ObserverNet, y: int, gap: int
) -> list[CongruenceRow]:
    """Per-tick congruence rows for every intervention event in a session."""
    robot_stream = [r.robot for r in records]
    human_stream = [r.human if r.human_active else None for r in records]
    robot_labels = classify_stream(robot_stream, net)
    human_labels = classify_stream(human_stream, net)
    events = segment_events([r.human_active for r in records], gap)

    rows: list[CongruenceRow] = []
    history_per_event: dict[int, list[int]] = {}
    for i, rec in enumerate(records):
        ev = events[i]
        if ev == 0:
            continue
        c: int | None = None
        if human_labels[i] is not None and robot_labels[i] is not None:
            c = 1 if human_labels[i] == robot_labels[i] else 0
            history_per_event.setdefault(ev, []).append(c)
        p = congruence_probability(history_per_event.get(ev, []), y)
        rows.append(CongruenceRow(t=rec.t, event=ev, c=c, p=p))
    return rows


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def write_confusion_csv(
    matrix: np.ndarray, categories: list[str], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true"] + list(categories))
        for label, row in zip(categories, matrix):
            writer.writerow([label] + [f"{v:.6f}" for v in row])


def write_congruence_csv(rows: list[CongruenceRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "event", "c", "P"])
        for row in rows:
            writer.writerow(
                [
                    row.t,
                    row.event,
                    "" if row.c is None else row.c,
                    "" if row.p is None else f"{row.p:.6f}",
                ]
            )


def write_pca_csv(
    params: NetworkParams,
    window: AdaptiveWindow,
    config: RunConfig,
    labels: list[str],
    steps: int,
    path: str | Path,
) -> np.ndarray:
    """Project highest-layer states (shared basis across behaviors) to 2-D."""
    states = high_layer_states(params, window, config, steps)  # (steps, S, dK)
    S = states.shape[1]
    flat = states.reshape(-1, states.shape[-1])
    result = pca_latent(flat, n_components=2)
    proj = result.projected.reshape(steps, S, 2)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "primitive", "pc1", "pc2"])
        for s, label in enumerate(labels):
            for t in range(steps):
                writer.writerow(
                    [t + 1, label, f"{proj[t, s, 0]:.8f}", f"{proj[t, s, 1]:.8f}"]
                )
    return proj


def session_summary(
    records: list[TickRecord], net: ObserverNet | None, y: int, gap: int
) -> dict:
    """Event count and mean congruence per event for a finished session."""
    active = [r.human_active for r in records]
    events = segment_events(active, gap)
    n_events = max(events) if events else 0
    summary: dict = {
        "ticks": len(records),
        "events": n_events,
        "mean_congruence": {},
    }
    if net is not None and n_events > 0:
        rows = congruence_series(records, net, y, gap)
        per_event: dict[int, list[int]] = {}
        for row in rows:
            if row.c is not None:
                per_event.setdefault(row.event, []).append(row.c)
        summary["mean_congruence"] = {
            str(ev): float(np.mean(cs)) for ev, cs in sorted(per_event.items())
        }
    return summary
