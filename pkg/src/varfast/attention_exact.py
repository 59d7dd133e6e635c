"""Reference softmax attention, plus a materialized-matrix oracle for tests.

The layer computes D^-1 A X W_V with A_ij = exp(x_i W_Q (x_j W_K)^T) and
D = diag(A 1). The production path subtracts the per-row score maximum
inside the exponential; the shift cancels against the row normalizer, so in
exact arithmetic the output is identical to the direct definition while
overflow becomes impossible for any finite scores. The oracle path
:func:`attn_matrix` materializes A without the shift, exactly as defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import OpCounter, attn_exact_cost
from .errors import DimensionMismatch, NumericOverflow, TooLargeToMaterialize
from .tensors import FlatMatrix

MATERIALIZE_GUARD = 4096


@dataclass(frozen=True)
class AttentionParams:
    """Query/key/value projection weights with a declared entry bound."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    entry_bound: float

    def __post_init__(self):
        if self.entry_bound <= 0:
            raise ValueError("entry_bound must be positive")
        mats = {}
        for name in ("w_q", "w_k", "w_v"):
            m = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
            if not np.isfinite(m).all():
                raise NumericOverflow(f"non-finite entry in {name}")
            if np.max(np.abs(m)) > self.entry_bound:
                raise ValueError(f"{name} exceeds entry bound {self.entry_bound}")
            m.flags.writeable = False
            mats[name] = m
        if not (mats["w_q"].shape == mats["w_k"].shape == mats["w_v"].shape):
            raise DimensionMismatch("w_q, w_k, w_v must share one dimension")
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @property
    def dim(self) -> int:
        return self.w_q.shape[0]


def _check_finite(a: np.ndarray, what: str):
    if not np.isfinite(a).all():
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(a))[0])
        raise NumericOverflow(f"non-finite value in {what} at {bad}", index=bad)


def attn_exact(
    x: FlatMatrix,
    p: AttentionParams,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> FlatMatrix:
    """Softmax attention output; each row is a convex mix of value rows."""
    if x.cols != p.dim:
        raise DimensionMismatch(f"input width {x.cols} != weight dim {p.dim}")
    with np.errstate(over="ignore", invalid="ignore"):
        q = x.data @ p.w_q
        k = x.data @ p.w_k
        v = x.data @ p.w_v
        scores = q @ k.T
        _check_finite(scores, "attention scores")
        shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
        denom = shifted.sum(axis=1, keepdims=True)
        out = (shifted @ v) / denom
    _check_finite(out, "attention output")
    if counter is not None and stage is not None:
        counter.add(stage, attn_exact_cost(x.rows, x.cols))
    return FlatMatrix(out)


def attn_matrix(x: FlatMatrix, p: AttentionParams) -> np.ndarray:
    """Materialize the L x L attention matrix A; testing oracle only.

    Computed without the stabilizing shift so the entries are the literal
    exponentials. Guarded to modest sizes; overflow or underflow to zero
    raises rather than returning a quietly wrong matrix.
    """
    if x.rows > MATERIALIZE_GUARD:
        raise TooLargeToMaterialize(
            f"refusing to materialize {x.rows}x{x.rows} attention matrix"
        )
    if x.cols != p.dim:
        raise DimensionMismatch(f"input width {x.cols} != weight dim {p.dim}")
    with np.errstate(over="ignore", invalid="ignore"):
        q = x.data @ p.w_q
        k = x.data @ p.w_k
        scores = q @ k.T
        _check_finite(scores, "attention scores")
        a = np.exp(scores)
    _check_finite(a, "attention matrix")
    if (a <= 0.0).any():
        bad = tuple(int(i) for i in np.argwhere(a <= 0.0)[0])
        raise NumericOverflow(f"attention entry underflowed to zero at {bad}", index=bad)
    return a
