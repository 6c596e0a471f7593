"""Dense scaled dot-product attention over 2D token grids, plus entropy metrics.

Desk-scale only: the full row-stochastic weight matrix is materialized so it
can be inspected, mapped back onto the grid, and measured. Single head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rope import RopeSchedule, axial_rotary


@dataclass(frozen=True, eq=False)
class AttentionField:
    """Row-stochastic attention weights; rows are query tokens, columns keys."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("weights must be a 2D matrix")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-5:
            raise ValueError("every row must sum to 1 within 1e-5")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row softmax with max subtraction for stability."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def attend(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, logit_scale: float = 1.0
) -> tuple[np.ndarray, AttentionField]:
    """softmax(logit_scale * Q K^T / sqrt(D)) V."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("Q, K, V must be 2D matrices")
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise ValueError(f"shape mismatch: Q{q.shape} K{k.shape} V{v.shape}")
    if logit_scale <= 0:
        raise ValueError("logit_scale must be positive")
    for name, mat in (("Q", q), ("K", k), ("V", v)):
        if not np.all(np.isfinite(mat)):
            raise ValueError(f"{name} contains non-finite values")
    logits = logit_scale * (q @ k.T) / np.sqrt(q.shape[1])
    field = AttentionField(softmax_rows(logits))
    return field.weights @ v, field


def grid_positions(height: int, width: int) -> np.ndarray:
    """(h, w) coordinates of each token in row-major order, shape (H*W, 2)."""
    hh, ww = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return np.stack([hh.ravel(), ww.ravel()], axis=1)


def attend_rotary(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    positions: np.ndarray,
    sched_h: RopeSchedule,
    sched_w: RopeSchedule,
    scale_h: np.ndarray | None = None,
    scale_w: np.ndarray | None = None,
    extra_logit_scale: float = 1.0,
) -> tuple[np.ndarray, AttentionField]:
    """Apply (scaled) axial rotary to Q and K at their grid positions, then attend.

    Scaling both sides means a constant per-dimension scale c multiplies the
    logits by c^2 relative to the unscaled case.
    """
    positions = np.asarray(positions)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError("positions must have shape (N, 2)")
    if positions.shape[0] != np.asarray(q).shape[0] or positions.shape[0] != np.asarray(k).shape[0]:
        raise ValueError("positions must cover every query and key token")
    ph, pw = positions[:, 0], positions[:, 1]
    q_rot = axial_rotary(q, ph, pw, sched_h, sched_w, scale_h, scale_w)
    k_rot = axial_rotary(k, ph, pw, sched_h, sched_w, scale_h, scale_w)
    return attend(q_rot, k_rot, v, logit_scale=extra_logit_scale)


def attention_entropy(field: AttentionField) -> tuple[np.ndarray, float]:
    """Shannon entropy of each query's weight row (natural log), plus the mean."""
    w = field.weights
    terms = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0)
    per_row = -terms.sum(axis=1)
    return per_row, float(per_row.mean())


def entropy_delta(field_a: AttentionField, field_b: AttentionField) -> float:
    """Mean entropy of a minus mean entropy of b; positive means a is more diffuse."""
    return attention_entropy(field_a)[1] - attention_entropy(field_b)[1]
