"""Session loop: one tick per control period, log records, pacing.

Each tick generates the next intended action from the prior, blends it with
the human's input, feeds the enacted (mixed) position back as the new
sensation, and — once the window is full — slides the window and runs online
inference.  The loop can run paced against the wall clock (live mode) or
flat-out (replay/headless mode, in which wall times are recorded as zero so
logs are bit-reproducible).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .deliberation import SlidingWindow, infer_window, mix_control, reset_session
from .encoding import decode_frames, encode_positions
from .errors import ConfigError
from .network import LatentState, initial_state, prior_step
from .params import NetworkParams

LOG_HEADER = [
    "t", "human_x", "human_y", "human_active", "robot_x", "robot_y",
    "mixed_x", "mixed_y", "nelbo", "epochs", "wall_ms",
]


@dataclass
class TickRecord:
    t: int
    human: np.ndarray | None
    human_active: bool
    robot: np.ndarray
    mixed: np.ndarray
    nelbo: float
    epochs_run: int
    wall_ms: float


@dataclass
class SessionResult:
    records: list[TickRecord]
    wall_s: float  # first tick start to last tick end (0 when unpaced)
    jitter_ms: list[float]  # per-tick |actual start - deadline|, paced mode only

    def jitter_p95(self) -> float:
        if not self.jitter_ms:
            return 0.0
        return float(np.percentile(np.array(self.jitter_ms), 95))


class Session:
    """Exclusive owner of one live interaction's state.

    `warm_state` selects which learned cycle the robot starts on (the
    posterior's opening context for that sequence); without it the session
    starts from the neutral zero context.
    """

    def __init__(
        self,
        params: NetworkParams,
        config: RunConfig,
        warm_state: LatentState | None = None,
    ):
        self.params = params
        self.config = config
        self.net = config.network
        self.rng = np.random.default_rng(config.seed)
        self.window: SlidingWindow = reset_session(self.net, config.window.size)
        self.live: LatentState = (
            initial_state(self.net) if warm_state is None
            else LatentState(
                h=[h.copy() for h in warm_state.h],
                d=[d.copy() for d in warm_state.d],
            )
        )
        self.window.anchor = LatentState(
            h=[h.copy() for h in self.live.h], d=[d.copy() for d in self.live.d]
        )
        self.prev_mixed: np.ndarray | None = None
        self.t = 0

    def _draw_eps(self) -> list[np.ndarray]:
        if self.config.window.eps_mode == "sampled":
            return [
                self.rng.standard_normal(spec.z_units) for spec in self.net.layers
            ]
        return [np.zeros(spec.z_units) for spec in self.net.layers]

    def tick(
        self,
        human: np.ndarray | None,
        human_active: bool,
        budget_s: float | None = None,
        measure_wall: bool = True,
    ) -> TickRecord:
        """Advance one control period; returns its record."""
        start = time.perf_counter()
        self.t += 1
        wcfg = self.config.window

        robot_state, robot_frame = prior_step(self.live, self.params, self.net)
        robot_pos = decode_frames(robot_frame)

        human_pos = None if human is None else np.asarray(human, dtype=np.float64)
        active = human_active and human_pos is not None
        mixed = mix_control(
            human_pos if active else None, robot_pos, self.prev_mixed, self.config.mixer
        )
        self.prev_mixed = mixed

        sensation = encode_positions(mixed, self.net.softmax_bins, self.net.sigma_enc)

        if not self.window.full:
            self.window.append(sensation, self._draw_eps())
            self.live = robot_state
            result = infer_window(self.window, self.params, self.net, 0, wcfg.rate)
            nelbo, epochs_run = result.nelbo, 0
        else:
            pre = self.window.posterior(self.params, self.net)
            self.window.slide(
                LatentState(h=[h[0] for h in pre.h], d=[d[0] for d in pre.d])
            )
            self.window.append(sensation, self._draw_eps())
            result = infer_window(
                self.window, self.params, self.net,
                wcfg.n_epochs, wcfg.rate, budget_s,
            )
            self.live = result.end_state
            nelbo, epochs_run = result.nelbo, result.epochs_run

        wall_ms = (time.perf_counter() - start) * 1000.0 if measure_wall else 0.0
        return TickRecord(
            t=self.t, human=human_pos, human_active=active,
            robot=robot_pos, mixed=mixed, nelbo=nelbo,
            epochs_run=epochs_run, wall_ms=wall_ms,
        )


def run_session(
    params: NetworkParams,
    config: RunConfig,
    inputs=None,
    ticks: int | None = None,
    real_time: bool = False,
    warm_state: LatentState | None = None,
) -> SessionResult:
    """Run a full session headlessly.

    `inputs` maps a 1-based tick index to (position, active) — a callable, a
    dict, or None for no human input.  With real_time=True the loop paces
    ticks on a drift-corrected deadline schedule and measures jitter; without
    it, wall times are zeroed so two runs produce identical logs.
    """
    total = config.session.total_ticks if ticks is None else ticks
    period = config.session.tick_ms / 1000.0
    session = Session(params, config, warm_state=warm_state)
    records: list[TickRecord] = []
    jitter: list[float] = []

    def lookup(t: int):
        if inputs is None:
            return None, False
        if callable(inputs):
            return inputs(t)
        entry = inputs.get(t)
        if entry is None:
            return None, False
        return entry

    t0 = time.perf_counter()
    wall_start = None
    for i in range(total):
        if real_time:
            deadline = t0 + i * period
            now = time.perf_counter()
            if now < deadline:
                time.sleep(deadline - now)
            actual = time.perf_counter()
            jitter.append(abs(actual - deadline) * 1000.0)
            if wall_start is None:
                wall_start = actual
        pos, active = lookup(i + 1)
        budget = config.window.budget_ms / 1000.0 if real_time else None
        records.append(
            session.tick(pos, active, budget_s=budget, measure_wall=real_time)
        )
    wall_s = (time.perf_counter() - wall_start) if wall_start is not None else 0.0
    return SessionResult(records=records, wall_s=wall_s, jitter_ms=jitter)


# ---------------------------------------------------------------------------
# Log persistence
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    # repr gives the shortest digits that parse back to the exact float64,
    # which keeps recorded traces replayable bit-for-bit.
    return repr(float(value))


def write_session_log(records: list[TickRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_HEADER)
        for r in records:
            hx, hy = ("", "") if r.human is None else (_fmt(r.human[0]), _fmt(r.human[1]))
            writer.writerow(
                [
                    r.t, hx, hy, int(r.human_active),
                    _fmt(r.robot[0]), _fmt(r.robot[1]),
                    _fmt(r.mixed[0]), _fmt(r.mixed[1]),
                    _fmt(r.nelbo), r.epochs_run, _fmt(r.wall_ms),
                ]
            )


def read_session_log(path: str | Path) -> list[TickRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LOG_HEADER:
            raise ConfigError(f"{path}: unexpected session log header {reader.fieldnames}")
        for row in reader:
            human = None
            if row["human_x"] != "":
                human = np.array([float(row["human_x"]), float(row["human_y"])])
            records.append(
                TickRecord(
                    t=int(row["t"]),
                    human=human,
                    human_active=bool(int(row["human_active"])),
                    robot=np.array([float(row["robot_x"]), float(row["robot_y"])]),
                    mixed=np.array([float(row["mixed_x"]), float(row["mixed_y"])]),
                    nelbo=float(row["nelbo"]),
                    epochs_run=int(row["epochs"]),
                    wall_ms=float(row["wall_ms"]),
                )
            )
    return records


INPUT_HEADER = ["t", "x", "y", "active"]


def write_input_trace(
    rows: list[tuple[int, float, float, int]], path: str | Path
) -> None:
    """Input trace CSV: one row per tick with human input, `t,x,y,active`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INPUT_HEADER)
        for t, x, y, active in rows:
            writer.writerow([t, _fmt(x), _fmt(y), int(active)])


def read_input_trace(path: str | Path) -> dict[int, tuple[np.ndarray, bool]]:
    inputs: dict[int, tuple[np.ndarray, bool]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != INPUT_HEADER:
            raise ConfigError(f"{path}: unexpected input trace header {reader.fieldnames}")
        for row in reader:
            inputs[int(row["t"])] = (
                np.array([float(row["x"]), float(row["y"])]),
                bool(int(row["active"])),
            )
    return inputs
