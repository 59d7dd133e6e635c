"""Deterministic operation-cost model.

Counts are exact integer functions of layer shapes (plus the selected
polynomial degree on the fast attention path). They never depend on the
values flowing through a layer: equal shapes, mode, and degree always report
equal counts, which is what makes the scaling fits reproducible.

Conventions, fixed here once:
  * a length-n inner product is charged 2n - 1 multiplications and n - 1
    additions (the fused-dot convention the quartic fit is built on);
  * divisions are charged as multiplications;
  * building one truncated-exponential feature is charged g multiplications
    (the naive power-product cost), regardless of how the implementation
    actually shares partial monomials;
  * resampler taps are charged per output sample: 16 weight combines plus,
    per channel, 16 tap products and one normalizing division; the 1-D
    kernel evaluations are setup and are not charged.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

STAGE1_ATTN = "stage1_attn"
STAGE1_UP = "stage1_up"
STAGE2 = "stage2"
STAGE3 = "stage3"
STAGES = (STAGE1_ATTN, STAGE1_UP, STAGE2, STAGE3)


@dataclass
class OpCounts:
    """Multiplication / addition / exp-evaluation tallies."""

    mults: int = 0
    adds: int = 0
    exps: int = 0

    def __iadd__(self, other: "OpCounts") -> "OpCounts":
        self.mults += other.mults
        self.adds += other.adds
        self.exps += other.exps
        return self

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(
            self.mults + other.mults, self.adds + other.adds, self.exps + other.exps
        )

    def as_dict(self):
        return {"mults": self.mults, "adds": self.adds, "exps": self.exps}


class OpCounter:
    """Per-stage tally of operation counts."""

    def __init__(self):
        self.stages = {s: OpCounts() for s in STAGES}

    def add(self, stage: str, counts: OpCounts):
        if stage not in self.stages:
            raise KeyError(f"unknown stage tag {stage!r}")
        self.stages[stage] += counts

    def get(self, stage: str) -> OpCounts:
        return self.stages[stage]

    def total(self) -> OpCounts:
        out = OpCounts()
        for c in self.stages.values():
            out += c
        return out

    def as_dict(self):
        return {s: c.as_dict() for s, c in self.stages.items()}


def feature_count(d: int, g: int) -> int:
    """Number of monomial features of degree <= g in d variables."""
    return comb(d + g, g)


def attn_exact_cost(L: int, d: int) -> OpCounts:
    """Cost of one exact attention layer on L tokens of width d.

    Multiplications: L^2 (2d-1) for the score inner products, 2 L d (2d-1)
    for the query/key projections, L^2 d + L d (2d-1) for the value path.
    """
    mults = (
        L * L * (2 * d - 1)
        + 2 * L * d * (2 * d - 1)
        + L * L * d
        + L * d * (2 * d - 1)
    )
    adds = (
        L * L * (d - 1)
        + 2 * L * d * (d - 1)
        + L * d * (L - 1)
        + L * d * (d - 1)
        + L * (L - 1)
    )
    return OpCounts(mults=mults, adds=adds, exps=L * L)


def attn_fast_cost(L: int, d: int, g: int) -> OpCounts:
    """Cost of one low-rank attention layer at degree g.

    With k = C(d+g, g) features: 3 L d (2d-1) for the projections,
    2 L k g to build both feature matrices, k d (2L-1) + L d (2k-1) for the
    value path, L (2k-1) for the normalizer, and L d normalizing divisions.
    Linear in L for fixed d and g; no exp evaluations.
    """
    k = feature_count(d, g)
    mults = (
        3 * L * d * (2 * d - 1)
        + 2 * L * k * g
        + k * d * (2 * L - 1)
        + L * d * (2 * k - 1)
        + L * (2 * k - 1)
        + L * d
    )
    adds = (
        3 * L * d * (d - 1)
        + k * d * (L - 1)
        + L * d * (k - 1)
        + k * (L - 1)
        + L * (k - 1)
    )
    return OpCounts(mults=mults, adds=adds, exps=0)


def up_interp_cost(h_out: int, w_out: int, d: int) -> OpCounts:
    mults = h_out * w_out * (16 + 16 * d + d)
    adds = h_out * w_out * (15 + 15 * d)
    return OpCounts(mults=mults, adds=adds, exps=0)


def conv_cost(h: int, w: int, c_in: int, c_out: int) -> OpCounts:
    # 9 c_in products per output entry; 9 c_in - 1 accumulations plus the bias add
    mults = h * w * c_out * 9 * c_in
    adds = h * w * c_out * 9 * c_in
    return OpCounts(mults=mults, adds=adds, exps=0)


def map_sum_cost(h: int, w: int, d: int, n_maps: int) -> OpCounts:
    return OpCounts(mults=0, adds=(n_maps - 1) * h * w * d, exps=0)


def residual_add_cost(h: int, w: int, d: int) -> OpCounts:
    return OpCounts(mults=0, adds=h * w * d, exps=0)
