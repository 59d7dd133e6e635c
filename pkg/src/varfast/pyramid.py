"""Bicubic spline kernel, single-step up-interpolation, and the pyramid layer.

The resampler maps output pixel centers onto source coordinates with the
align-centers convention, samples a 4x4 source neighborhood (edge-replicated
at the borders), and renormalizes the sixteen tap weights to sum to one.
With the nonnegative cubic B-spline kernel every output entry is therefore a
convex combination of source entries, which gives the layer two properties
the rest of the package leans on: it never expands an entrywise error, and
it preserves per-channel value ranges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .counting import OpCounter, up_interp_cost
from .errors import DimensionMismatch, InvalidTarget
from .tensors import TokenMap

SUPPORT_RADIUS = 2


class KernelChoice(enum.Enum):
    """Piecewise-cubic resampling kernel, support (-2, 2).

    CUBIC_BSPLINE keeps weights in [0, 2/3] and is the default. CATMULL_ROM
    is the classical interpolating cubic; its negative lobes break the
    convex-combination guarantees, so it sits behind explicit config.
    """

    CUBIC_BSPLINE = "bspline"
    CATMULL_ROM = "catmullrom"

    @classmethod
    def from_name(cls, name: str) -> "KernelChoice":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown kernel {name!r}; expected 'bspline' or 'catmullrom'")


def kernel_eval(choice: KernelChoice, x: float) -> float:
    """Evaluate the kernel weight at offset ``x``; zero outside (-2, 2)."""
    ax = abs(float(x))
    if ax >= SUPPORT_RADIUS:
        return 0.0
    if choice is KernelChoice.CUBIC_BSPLINE:
        if ax < 1.0:
            return ((2.0 - ax) ** 3 - 4.0 * (1.0 - ax) ** 3) / 6.0
        return (2.0 - ax) ** 3 / 6.0
    if choice is KernelChoice.CATMULL_ROM:
        if ax < 1.0:
            return 1.5 * ax**3 - 2.5 * ax**2 + 1.0
        return -0.5 * ax**3 + 2.5 * ax**2 - 4.0 * ax + 2.0
    raise ValueError(f"unknown kernel choice {choice!r}")


def _axis_taps(src: int, dst: int, choice: KernelChoice):
    """Per-output-index source indices and normalized weights for one axis.

    Output center i maps to source coordinate s = (i + 0.5) * src/dst - 0.5;
    the four taps sit at floor(s) - 1 .. floor(s) + 2 with weights
    W(f+1), W(f), W(1-f), W(2-f) for fractional offset f, renormalized to
    sum to one. Tap indices are clamped to the source range.
    """
    idx = np.empty((dst, 4), dtype=np.intp)
    wts = np.empty((dst, 4), dtype=np.float64)
    for i in range(dst):
        s = (i + 0.5) * src / dst - 0.5
        base = math.floor(s)
        f = s - base
        w = np.array(
            [
                kernel_eval(choice, f + 1.0),
                kernel_eval(choice, f),
                kernel_eval(choice, 1.0 - f),
                kernel_eval(choice, 2.0 - f),
            ]
        )
        wts[i] = w / w.sum()
        for t in range(4):
            idx[i, t] = min(max(base - 1 + t, 0), src - 1)
    return idx, wts


def up_interpolate(
    x: TokenMap,
    target_h: int,
    target_w: int,
    choice: KernelChoice = KernelChoice.CUBIC_BSPLINE,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> TokenMap:
    """Resample a token map up to ``target_h x target_w``.

    A same-size target returns the input unchanged (resampling is only
    defined for enlargement; the degenerate case is the identity).
    Accumulation runs over the 16 taps in a fixed (row-tap, col-tap) order,
    so equal inputs give bit-identical outputs regardless of parallelism.
    """
    if target_h < x.height or target_w < x.width:
        raise InvalidTarget(
            f"target {target_h}x{target_w} smaller than source {x.height}x{x.width}"
        )
    if target_h == x.height and target_w == x.width:
        return x
    ri, rw = _axis_taps(x.height, target_h, choice)
    ci, cw = _axis_taps(x.width, target_w, choice)
    acc = np.zeros((target_h, target_w, x.channels), dtype=np.float64)
    for s in range(4):
        rows = x.data[ri[:, s]]  # (target_h, src_w, d)
        for t in range(4):
            taps = rows[:, ci[:, t], :]  # (target_h, target_w, d)
            acc += (rw[:, s][:, None] * cw[:, t][None, :])[:, :, None] * taps
    if counter is not None and stage is not None:
        counter.add(stage, up_interp_cost(target_h, target_w, x.channels))
    return TokenMap(acc)


def up_gain(src_h: int, src_w: int, target_h: int, target_w: int, choice: KernelChoice) -> float:
    """Worst-case error amplification of one resampling, max_i sum_t |w|.

    Exactly 1 for the nonnegative B-spline (normalized convex weights);
    above 1 for Catmull-Rom because of its negative lobes.
    """
    if target_h == src_h and target_w == src_w:
        return 1.0
    _, rw = _axis_taps(src_h, target_h, choice)
    _, cw = _axis_taps(src_w, target_w, choice)
    return float(np.abs(rw).sum(axis=1).max() * np.abs(cw).sum(axis=1).max())


@dataclass(frozen=True)
class PyramidSchedule:
    """Scale schedule: step k is an alpha^(k-1) square map.

    Token totals follow the geometric identity
    sum_{i<=k} alpha^(2(i-1)) = (alpha^(2k) - 1) / (alpha^2 - 1).
    """

    alpha: int
    num_scales: int

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 2:
            raise ValueError("alpha must be an integer >= 2")
        if int(self.num_scales) != self.num_scales or self.num_scales < 1:
            raise ValueError("num_scales must be a positive integer")

    @property
    def sizes(self):
        return [self.alpha ** (k - 1) for k in range(1, self.num_scales + 1)]

    @property
    def final_size(self) -> int:
        return self.alpha ** (self.num_scales - 1)

    def size(self, k: int) -> int:
        if not 1 <= k <= self.num_scales:
            raise ValueError(f"scale index {k} out of range 1..{self.num_scales}")
        return self.alpha ** (k - 1)

    def tokens_through(self, k: int) -> int:
        """Total tokens across scales 1..k, equal to (a^2k - 1)/(a^2 - 1)."""
        if not 1 <= k <= self.num_scales:
            raise ValueError(f"scale index {k} out of range 1..{self.num_scales}")
        return (self.alpha ** (2 * k) - 1) // (self.alpha**2 - 1)

    @property
    def total_tokens(self) -> int:
        return self.tokens_through(self.num_scales)


def pyramid_up(
    x_init: TokenMap,
    maps,
    schedule: PyramidSchedule,
    choice: KernelChoice = KernelChoice.CUBIC_BSPLINE,
    counter: OpCounter | None = None,
    stage: str | None = None,
):
    """One pyramid step: keep the seed map and upsample each map one scale.

    Input maps X_1..X_k must match schedule sizes; the output is
    [x_init, up(X_1), ..., up(X_k)] with up(X_r) sized for scale r+1.
    """
    maps = list(maps)
    k = len(maps)
    if k + 1 > schedule.num_scales:
        raise DimensionMismatch(
            f"pyramid step with {k} maps does not fit a {schedule.num_scales}-scale schedule"
        )
    if x_init.height != 1 or x_init.width != 1:
        raise DimensionMismatch("x_init must be a 1x1 token map")
    for r, m in enumerate(maps, start=1):
        want = schedule.size(r)
        if m.height != want or m.width != want:
            raise DimensionMismatch(
                f"map {r} is {m.height}x{m.width}, schedule wants {want}x{want}"
            )
        if m.channels != x_init.channels:
            raise DimensionMismatch("channel mismatch between x_init and pyramid maps")
    out = [x_init]
    for r, m in enumerate(maps, start=1):
        nxt = schedule.size(r + 1)
        out.append(up_interpolate(m, nxt, nxt, choice, counter, stage))
    return out
