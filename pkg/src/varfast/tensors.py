"""Dense value types and the reshapes between pyramid and sequence views.

A :class:`TokenMap` is an h x w grid of d-dimensional tokens stored in
(row, column, channel) order; a :class:`FlatMatrix` is the sequence view
with one token per row. Both are immutable after construction and always
hold finite 64-bit floats, so flattening a pyramid and splitting it back
are bit-exact inverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericOverflow


def _as_finite_f64(a, ndim: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{what} needs a {ndim}-d array, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimensionMismatch(f"{what} has an empty axis: shape {arr.shape}")
    if not np.isfinite(arr).all():
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise NumericOverflow(f"non-finite entry in {what} at {bad}", index=bad)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TokenMap:
    """h x w x d tensor of finite float64 entries, immutable."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_finite_f64(self.data, 3, "token map"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class FlatMatrix:
    """L x d token sequence, finite float64, immutable."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_finite_f64(self.data, 2, "flat matrix"))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


def flatten(maps) -> FlatMatrix:
    """Concatenate token maps into one sequence, coarse scales first.

    Each map contributes a contiguous block of ``h*w`` rows in (row, column)
    raster order. All maps must share a channel count.
    """
    maps = list(maps)
    if not maps:
        raise DimensionMismatch("flatten needs at least one map")
    d = maps[0].channels
    for m in maps[1:]:
        if m.channels != d:
            raise DimensionMismatch(
                f"channel mismatch in flatten: {m.channels} != {d}"
            )
    blocks = [m.data.reshape(m.height * m.width, d) for m in maps]
    return FlatMatrix(np.concatenate(blocks, axis=0))


def reshape_to_pyramid(m: FlatMatrix, schedule, k: int):
    """Split a flat sequence back into the first ``k`` pyramid maps.

    Inverse of :func:`flatten` for maps sized by ``schedule``; the row count
    must equal the schedule's token total through step ``k``.
    """
    if not 1 <= k <= schedule.num_scales:
        raise DimensionMismatch(f"k={k} outside schedule with {schedule.num_scales} scales")
    expected = schedule.tokens_through(k)
    if m.rows != expected:
        raise DimensionMismatch(
            f"row count {m.rows} does not match schedule total {expected} for k={k}"
        )
    out = []
    offset = 0
    for r in range(1, k + 1):
        s = schedule.size(r)
        block = m.data[offset : offset + s * s]
        out.append(TokenMap(block.reshape(s, s, m.cols)))
        offset += s * s
    return out


def _raw(a) -> np.ndarray:
    if isinstance(a, (TokenMap, FlatMatrix)):
        return a.data
    return np.asarray(a, dtype=np.float64)


def inf_norm_diff(a, b) -> float:
    """Max absolute entrywise difference between two same-shape values."""
    x, y = _raw(a), _raw(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.max(np.abs(x - y)))


def inf_norm(a) -> float:
    """Max absolute entry."""
    return float(np.max(np.abs(_raw(a))))


def clip_entries(m: FlatMatrix, r_bound: float) -> FlatMatrix:
    """Saturate entries into ``[-r_bound, r_bound]``; in-range entries pass through."""
    if r_bound <= 0:
        raise ValueError("r_bound must be positive")
    return FlatMatrix(np.clip(m.data, -r_bound, r_bound))


def clip_array(a: np.ndarray, r_bound: float) -> np.ndarray:
    if r_bound <= 0:
        raise ValueError("r_bound must be positive")
    return np.clip(a, -r_bound, r_bound)
