"""Sparse softmax encoding of workspace values.

Each degree of freedom is represented as a probability vector over a set of
reference points spread evenly across the normalized workspace [-1, 1].
A scalar v maps to softmax(-(v - ref_j)^2 / sigma_enc^2); decoding takes the
expectation sum_j p_j * ref_j.  A "frame" stacks one such vector per degree
of freedom, shape (dof, bins).
"""

from __future__ import annotations

import numpy as np

FRAME_TOL = 1e-9


def reference_points(bins: int) -> np.ndarray:
    """Evenly spaced encoding references over [-1, 1]."""
    if bins < 2:
        raise ValueError(f"softmax_bins must be >= 2, got {bins}")
    return np.linspace(-1.0, 1.0, bins)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along `axis`."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def encode_values(values: np.ndarray, bins: int, sigma_enc: float) -> np.ndarray:
    """Encode workspace values (...,) into probability vectors (..., bins)."""
    refs = reference_points(bins)
    v = np.asarray(values, dtype=np.float64)[..., None]
    return softmax(-((v - refs) ** 2) / (sigma_enc * sigma_enc))


def decode_frames(frames: np.ndarray) -> np.ndarray:
    """Decode probability vectors (..., bins) back to values (...,)."""
    frames = np.asarray(frames, dtype=np.float64)
    refs = reference_points(frames.shape[-1])
    return frames @ refs


def encode_positions(positions: np.ndarray, bins: int, sigma_enc: float) -> np.ndarray:
    """Encode positions (..., dof) into frames (..., dof, bins)."""
    return encode_values(np.asarray(positions, dtype=np.float64), bins, sigma_enc)


def validate_frames(frames: np.ndarray, tol: float = FRAME_TOL) -> None:
    """Check that every vector is nonnegative and sums to 1 within `tol`."""
    frames = np.asarray(frames)
    if frames.min() < 0.0:
        raise ValueError("softmax frame has negative entries")
    sums = frames.sum(axis=-1)
    err = np.abs(sums - 1.0).max()
    if err > tol:
        raise ValueError(f"softmax frame sums deviate from 1 by {err:.3e}")
