"""Intent observation: trajectory classifier, congruence metric, latent PCA.

The observer is a small feed-forward network mapping a short buffer of
2-DOF positions (flattened oldest-first, x before y) to one score per
behavior category; hidden layers use tanh, the output layer sigmoid.  It is
trained with mean squared error against one-hot targets on windows cut from
closed-loop generations of each learned behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adam import AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ObserverConfig, RunConfig
from .errors import CheckpointError, ConfigError, DivergenceError


@dataclass
class ObserverNet:
    """Fully connected scorer; weights (out, in) per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    categories: list[str]
    buffer_steps: int

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Scores in (0, 1) per category; x is (..., input_size)."""
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.tanh(h @ w.T + b)
        logits = h @ self.weights[-1].T + self.biases[-1]
        return 1.0 / (1.0 + np.exp(-logits))

    def named_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"obs.w{i}"] = w
            out[f"obs.b{i}"] = b
        return out


@dataclass
class IntentLabel:
    index: int
    category: str
    confidence: np.ndarray  # raw sigmoid scores per category


def init_observer(
    config: ObserverConfig,
    categories: list[str],
    dof: int,
    rng: np.random.Generator,
) -> ObserverNet:
    sizes = [dof * config.buffer_steps] + list(config.hidden) + [len(categories)]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return ObserverNet(
        weights=weights, biases=biases, categories=list(categories),
        buffer_steps=config.buffer_steps,
    )


def windows_from_positions(positions: np.ndarray, buffer_steps: int) -> np.ndarray:
    """Cut every contiguous buffer from a position sequence.

    positions (T, dof) -> (T - buffer_steps + 1, buffer_steps * dof), each row
    flattened oldest-first with the dof values of one step kept adjacent.
    """
    positions = np.asarray(positions, dtype=np.float64)
    T = positions.shape[0]
    n = T - buffer_steps + 1
    if n < 1:
        raise ConfigError(f"sequence of {T} steps too short for buffer {buffer_steps}")
    return np.stack(
        [positions[i : i + buffer_steps].reshape(-1) for i in range(n)]
    )


def observer_training_pairs(
    rollout_positions: dict[str, np.ndarray],
    config: ObserverConfig,
    categories: list[str],
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (inputs, one-hot targets) from per-category rollouts.

    The first `discard_steps` of each rollout are dropped so the effector has
    entered its cycle before windows are cut.
    """
    xs, ys = [], []
    for ci, cat in enumerate(categories):
        pos = np.asarray(rollout_positions[cat])[config.discard_steps :]
        wins = windows_from_positions(pos, config.buffer_steps)
        xs.append(wins)
        onehot = np.zeros((wins.shape[0], len(categories)))
        onehot[:, ci] = 1.0
        ys.append(onehot)
    return np.concatenate(xs), np.concatenate(ys)


def observer_train(
    inputs: np.ndarray,
    targets: np.ndarray,
    net: ObserverNet,
    epochs: int,
    adam: AdamState | None = None,
) -> ObserverNet:
    """Full-batch MSE training; mutates and returns `net`."""
    if adam is None:
        adam = AdamState()
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    n = x.shape[0]
    for _ in range(epochs):
        acts = [x]
        h = x
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            h = np.tanh(h @ w.T + b)
            acts.append(h)
        logits = h @ net.weights[-1].T + net.biases[-1]
        out = 1.0 / (1.0 + np.exp(-logits))
        if not np.all(np.isfinite(out)):
            raise DivergenceError("observer forward pass went non-finite")

        # d(mean squared error)/dlogits through the sigmoid
        delta = (2.0 / (n * y.shape[1])) * (out - y) * out * (1.0 - out)
        grads: dict[str, np.ndarray] = {}
        for i in range(len(net.weights) - 1, -1, -1):
            grads[f"obs.w{i}"] = np.einsum("ni,nj->ij", delta, acts[i])
            grads[f"obs.b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ net.weights[i]) * (1.0 - acts[i] ** 2)
        adam_step(net.named_tensors(), grads, adam)
    return net


def classify(buffer: np.ndarray, net: ObserverNet) -> IntentLabel | None:
    """Label a (buffer_steps, dof) position buffer; None when underfull.

    Ties on the argmax break toward the lowest category index.
    """
    buffer = np.asarray(buffer, dtype=np.float64)
    if buffer.ndim != 2 or buffer.shape[0] < net.buffer_steps:
        return None
    flat = buffer[-net.buffer_steps :].reshape(-1)
    scores = net.forward(flat)
    idx = int(np.argmax(scores))
    return IntentLabel(index=idx, category=net.categories[idx], confidence=scores)


def confusion_matrix(
    net: ObserverNet,
    test_positions: dict[str, np.ndarray],
    config: ObserverConfig,
) -> np.ndarray:
    """Row-normalized confusion over all windows of each category's test data."""
    cats = net.categories
    counts = np.zeros((len(cats), len(cats)))
    for ci, cat in enumerate(cats):
        pos = np.asarray(test_positions[cat])[config.discard_steps :]
        wins = windows_from_positions(pos, config.buffer_steps)
        scores = net.forward(wins)
        preds = np.argmax(scores, axis=1)
        for p in preds:
            counts[ci, p] += 1
    rows = counts.sum(axis=1, keepdims=True)
    return counts / np.maximum(rows, 1.0)


# ---------------------------------------------------------------------------
# Intention congruence
# ---------------------------------------------------------------------------


def congruence_flags(
    human_labels: list[int | None], robot_labels: list[int | None]
) -> list[int | None]:
    """Per-step agreement: 1 when both labels exist and match, 0 on mismatch,
    None when either stream has no classification."""
    flags: list[int | None] = []
    for h, r in zip(human_labels, robot_labels):
        if h is None or r is None:
            flags.append(None)
        else:
            flags.append(1 if h == r else 0)
    return flags


def congruence_probability(c_history: list[int], y: int) -> float | None:
    """Trailing mean of the last `y` agreement samples; None when empty."""
    if not c_history:
        return None
    tail = c_history[-y:]
    return float(sum(tail)) / len(tail)


def segment_events(active: list[bool], gap: int) -> list[int]:
    """Group contiguous activity into 1-based event ids (0 = no event).

    Gaps of up to `gap` inactive ticks inside an intervention keep the same
    event id; longer silences close the event.
    """
    ids = [0] * len(active)
    current = 0
    last_active = None
    for i, flag in enumerate(active):
        if flag:
            if last_active is None or i - last_active > gap:
                current += 1
            ids[i] = current
            last_active = i
    return ids


# ---------------------------------------------------------------------------
# PCA of latent states
# ---------------------------------------------------------------------------


@dataclass
class PcaResult:
    projected: np.ndarray  # (N, n_components)
    explained_variance: np.ndarray  # ratios per component
    components: np.ndarray  # (n_components, dims)
    mean: np.ndarray


def pca_latent(states: np.ndarray, n_components: int = 2) -> PcaResult:
    """Mean-centered PCA via SVD of a (N, dims) state sequence."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2:
        raise ConfigError("pca expects a 2-D (steps, dims) array")
    if states.shape[0] < n_components:
        raise ConfigError(
            f"need at least {n_components} samples, got {states.shape[0]}"
        )
    mean = states.mean(axis=0)
    centered = states - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    total = float(np.sum(svals**2))
    ratios = (svals[:n_components] ** 2) / total if total > 0 else svals[:n_components] * 0
    comps = vt[:n_components]
    return PcaResult(
        projected=centered @ comps.T,
        explained_variance=ratios,
        components=comps,
        mean=mean,
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_observer(path: str | Path, net: ObserverNet, config: RunConfig) -> None:
    tensors = net.named_tensors()
    extra = {
        "categories": net.categories,
        "buffer_steps": net.buffer_steps,
        "layer_count": len(net.weights),
    }
    save_checkpoint(
        path, "observer", config.to_dict(), config.hash(), tensors,
        net.categories, extra,
    )


def load_observer(path: str | Path) -> ObserverNet:
    ck: Checkpoint = load_checkpoint(path)
    if ck.kind != "observer":
        raise CheckpointError(f"{path}: expected an observer checkpoint, got '{ck.kind}'")
    n = int(ck.extra["layer_count"])
    weights = [ck.tensors[f"obs.w{i}"] for i in range(n)]
    biases = [ck.tensors[f"obs.b{i}"] for i in range(n)]
    return ObserverNet(
        weights=weights, biases=biases,
        categories=list(ck.extra["categories"]),
        buffer_steps=int(ck.extra["buffer_steps"]),
    )
