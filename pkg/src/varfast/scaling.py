"""Log-log scaling fits, the bench sweep, and the phase-transition sweep.

The bench runs the full pipeline over a range of pyramid depths in both
modes, reports the per-stage operation counts, and fits ordinary least
squares on (log n, log mults) to expose the quartic-versus-quadratic
behavior of the attention-bearing stages. The phase sweep holds n fixed and
walks the entry bound R = c * sqrt(ln n) across the feasibility frontier of
the degree-selection criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .attention_exact import AttentionParams, attn_exact
from .attention_fast import ApproxConfig, attn_fast_detailed, select_degree
from .config import RunConfig
from .counting import STAGE1_ATTN, STAGE1_UP, STAGE2, STAGE3
from .errors import InsufficientData, RangeTooLarge
from .pipeline import ExecutionMode, run_end_to_end
from .rng import Rng
from .tensors import FlatMatrix, inf_norm_diff

BENCH_STAGES = ("stage1", "stage2", "stage3")


@dataclass(frozen=True)
class ScalingReport:
    """OLS fit of log(count) against log(n)."""

    points: tuple
    slope: float
    residual: float


def fit_exponent(points) -> ScalingReport:
    """Least-squares exponent of count ~ n^slope; needs three positive points."""
    pts = [(float(n), float(c)) for n, c in points]
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 points, got {len(pts)}")
    if any(n <= 0 or c <= 0 for n, c in pts):
        raise InsufficientData("all points must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([c for _, c in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ScalingReport(points=tuple(pts), slope=float(slope), residual=resid)


def _stage_rows(trace, k: int, n: int, l_k: int, mode: str):
    counters = trace.counters
    stage1 = {
        key: counters[STAGE1_ATTN][key] + counters[STAGE1_UP][key]
        for key in ("mults", "adds", "exps")
    }
    per_stage = {
        "stage1": (stage1, trace.wall_ms["stage1"]),
        "stage2": (counters[STAGE2], trace.wall_ms["stage2"]),
        "stage3": (counters[STAGE3], trace.wall_ms["stage3"]),
    }
    rows = []
    for stage in BENCH_STAGES:
        counts, wall = per_stage[stage]
        rows.append(
            {
                "K": k,
                "n": n,
                "L_K": l_k,
                "mode": mode,
                "stage": stage,
                "mults": counts["mults"],
                "adds": counts["adds"],
                "exps": counts["exps"],
                "wall_ms": wall,
            }
        )
    return rows


@dataclass(frozen=True)
class BenchResult:
    rows: tuple
    slopes: dict  # (stage, mode) -> ScalingReport

    def slope(self, stage: str, mode: str) -> float:
        return self.slopes[(stage, mode)].slope


def bench_sweep(config: RunConfig, k_min: int, k_max: int, modes=("exact", "fast")) -> BenchResult:
    """Pipeline op counts over K = k_min..k_max for each mode, plus slope fits."""
    if k_min < 2 or k_max < k_min:
        raise InsufficientData(f"invalid depth range {k_min}..{k_max}")
    rows = []
    series: dict = {}
    for mode in modes:
        for k in range(k_min, k_max + 1):
            cfg = replace(config, num_scales=k, mode=mode)
            result = run_end_to_end(cfg, ExecutionMode.from_name(mode))
            n = cfg.n
            for row in _stage_rows(result.trace, k, n, result.trace.final_tokens, mode):
                rows.append(row)
                series.setdefault((row["stage"], mode), []).append((n, row["mults"]))
    slopes = {key: fit_exponent(pts) for key, pts in series.items()}
    return BenchResult(rows=tuple(rows), slopes=slopes)


@dataclass(frozen=True)
class PhaseRow:
    c: float
    r_bound: float
    score_bound: float
    degree: int | None
    status: str  # "ok" or "FAIL"
    err: float | None


def phase_sweep(
    n: int,
    c_values,
    delta: float,
    g_max: int,
    d: int = 4,
    seed: int = 0,
    token_cap: int = 256,
) -> list:
    """Feasibility frontier of the degree criterion at R = c * sqrt(ln n).

    For each c the declared score bound is b = d R^2 (entries of the
    projected queries and keys capped at R by construction: the comparison
    draws X in [-R, R] and uses identity projections). Feasible rows also
    run one fast-versus-exact comparison on min(n, token_cap) tokens and
    record the achieved max-norm error.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < delta <= 0.1:
        raise ValueError("delta must be in (0, 0.1]")
    c_list = [float(c) for c in c_values]
    if any(c <= 0 for c in c_list) or any(b <= a for a, b in zip(c_list, c_list[1:])):
        raise ValueError("c values must be positive and strictly ascending")
    rng = Rng(seed)
    rows = []
    for i, c in enumerate(c_list):
        r = c * math.sqrt(math.log(n))
        b = d * r * r
        try:
            g = select_degree(b, delta, g_max)
        except RangeTooLarge:
            rows.append(PhaseRow(c=c, r_bound=r, score_bound=b, degree=None, status="FAIL", err=None))
            continue
        err = None
        tokens = min(n, token_cap)
        x = FlatMatrix(rng.split(i).uniform(-r, r, (tokens, d)))
        eye = np.eye(d)
        params = AttentionParams(w_q=eye, w_k=eye, w_v=eye, entry_bound=1.0)
        cfg = ApproxConfig(delta=delta, g_max=g_max, r_bound=max(r, 1.0))
        fast = attn_fast_detailed(x, params, cfg, bound=b)
        exact = attn_exact(x, params)
        err = inf_norm_diff(fast.output, exact)
        rows.append(PhaseRow(c=c, r_bound=r, score_bound=b, degree=g, status="ok", err=err))
    return rows

