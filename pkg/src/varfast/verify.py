"""Executable error-bound suites with explicit constants.

Each verifier draws randomized instances, evaluates both sides of one
entrywise bound, and records the worst observed left/right ratio. The
constants are the explicit ones recoverable from each bound's derivation,
not asymptotic placeholders; where a derivation genuinely loses a constant
(the composed attention perturbation suite) the check applies a fixed
safety factor of 4 and treats anything beyond it as a violation.

Exact-constant checks allow a small float guard: the bounds are statements
about real arithmetic, and when both sides are differences of much larger
values, cancellation leaves absolute float noise proportional to the data
scale rather than to the difference. Each trial therefore supplies the
scale of its intermediate values, and a violation requires exceeding the
bound by more than 1e-12 relative plus 64 ulps of that scale.

Trials are independent; trial i draws from substream ``base + i`` of the
verifier seed, so reports do not depend on execution order or worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .attention_exact import AttentionParams, attn_exact
from .attention_fast import ApproxConfig, attn_fast_detailed
from .config import RunConfig
from .conv import ConvKernelSet, conv_forward
from .counting import feature_count
from .errors import RangeTooLarge
from .pipeline import ExecutionMode, run_end_to_end
from .pyramid import KernelChoice, up_interpolate
from .rng import Rng, thread_cap
from .tensors import FlatMatrix, TokenMap, inf_norm_diff

FLOAT_GUARD = 1.0 + 1e-12
ULP_SCALE = 64.0 * np.finfo(np.float64).eps
SAFETY_FACTOR = 4.0

_STREAM_BASE = {
    "B1": 10_000_000,
    "B2": 20_000_000,
    "B4": 40_000_000,
    "B5": 50_000_000,
    "C1": 60_000_000,
    "mode_equiv": 70_000_000,
}

def _sabotage(lemma_id: str) -> float:
    """Hidden negative-control hook: shrink one suite's bound to force failures."""
    if os.environ.get("VARFAST_VERIFY_SABOTAGE", "") == lemma_id:
        return 1e-9
    return 1.0


@dataclass
class BoundReport:
    """Outcome of one verification suite."""

    lemma_id: str
    trials: int = 0
    violations: int = 0
    skipped: int = 0
    max_ratio: float = 0.0
    trial_params: list = field(default_factory=list)

    def as_dict(self):
        return {
            "trials": self.trials,
            "violations": self.violations,
            "skipped": self.skipped,
            "max_ratio": self.max_ratio,
        }


def _run_trials(lemma_id: str, trials: int, seed: int, trial_fn) -> BoundReport:
    """Map trial_fn over substreams, reducing in trial order."""
    base = _STREAM_BASE[lemma_id]
    indices = range(trials)

    def one(i):
        return trial_fn(Rng(seed, base + i))

    workers = thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, indices))
    else:
        outcomes = [one(i) for i in indices]

    report = BoundReport(lemma_id=lemma_id, trials=trials)
    for outcome in outcomes:
        if outcome is None:
            report.skipped += 1
            continue
        lhs, rhs, scale, params = outcome
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        report.max_ratio = max(report.max_ratio, ratio)
        if lhs > rhs * FLOAT_GUARD + ULP_SCALE * scale:
            report.violations += 1
        report.trial_params.append(params)
    return report


def verify_poly_lipschitz(trials: int, seed: int = 0) -> BoundReport:
    """Polynomial increments against the derivative-sum constant.

    For f of degree <= 8 with coefficients in [-1, 1] and x, x' in [-R, R]:
    |f(x) - f(x')| <= (sum_i |a_i| i R^(i-1)) |x - x'|.
    """
    factor = _sabotage("B1")

    def trial(rng: Rng):
        r = float(rng.uniform(1.05, 3.0))
        deg = rng.integers(0, 9)
        coeffs = rng.uniform(-1.0, 1.0, deg + 1)
        x, xp = rng.uniform(-r, r, 2)
        lhs = abs(
            float(np.polynomial.polynomial.polyval(x, coeffs))
            - float(np.polynomial.polynomial.polyval(xp, coeffs))
        )
        lipschitz = sum(abs(coeffs[i]) * i * r ** (i - 1) for i in range(1, deg + 1))
        rhs = lipschitz * abs(x - xp) * factor
        scale = sum(abs(coeffs[i]) * r**i for i in range(deg + 1))
        return lhs, rhs, scale, {"R": r, "g": deg}

    return _run_trials("B1", trials, seed, trial)


def verify_inner_product(trials: int, seed: int = 0) -> BoundReport:
    """Inner products under entrywise perturbation: 2 k eps R + k eps^2.

    The quadratic term covers perturbed entries exceeding the bound R by up
    to eps.
    """
    factor = _sabotage("B2")

    def trial(rng: Rng):
        k = rng.integers(1, 17)
        r = float(rng.uniform(1.05, 3.0))
        eps = 10.0 ** float(rng.uniform(-6.0, -1.0))
        u = rng.uniform(-r, r, k)
        v = rng.uniform(-r, r, k)
        up = u + rng.uniform(-eps, eps, k)
        vp = v + rng.uniform(-eps, eps, k)
        eps_real = max(np.max(np.abs(up - u)), np.max(np.abs(vp - v)))
        lhs = abs(float(up @ vp) - float(u @ v))
        rhs = (2.0 * k * eps_real * r + k * eps_real**2) * factor
        scale = k * (r + eps_real) ** 2
        return lhs, rhs, scale, {"k": k, "R": r, "eps": eps_real}

    return _run_trials("B2", trials, seed, trial)


def verify_attention_error(trials: int, seed: int = 0) -> BoundReport:
    """Fast attention on a perturbed input versus exact attention.

    Checks |attn_fast(X') - attn_exact(X)|_inf against
    k_feat R^(g+1) d eps + delta' with safety factor 4, where R > 1 bounds
    every matrix entry in play and eps bounds the input perturbation.
    Degree selection failures skip the trial and are recorded.
    """
    factor = _sabotage("B4")

    def trial(rng: Rng):
        d = rng.integers(2, 5)
        length = rng.integers(2, 65)
        r_decl = float(rng.uniform(1.1, 1.6))
        x_scale = float(rng.uniform(0.1, 0.4))
        w_scale = float(rng.uniform(0.1, 0.5))
        x = rng.uniform(-x_scale, x_scale, (length, d))
        params = AttentionParams(
            w_q=rng.uniform(-w_scale, w_scale, (d, d)),
            w_k=rng.uniform(-w_scale, w_scale, (d, d)),
            w_v=rng.uniform(-w_scale, w_scale, (d, d)),
            entry_bound=w_scale + 1e-9,
        )
        eps = 10.0 ** float(rng.uniform(-5.0, -2.0))
        xp = x + rng.uniform(-eps, eps, (length, d))
        eps_real = float(np.max(np.abs(xp - x)))
        delta = 10.0 ** float(rng.uniform(-8.0, -4.0))
        cfg = ApproxConfig(delta=delta, g_max=24, r_bound=r_decl)
        try:
            fast = attn_fast_detailed(FlatMatrix(xp), params, cfg)
        except RangeTooLarge:
            return None
        exact = attn_exact(FlatMatrix(x), params)
        lhs = inf_norm_diff(fast.output, exact)
        g = fast.degree
        k_feat = feature_count(d, g)
        rhs_base = k_feat * r_decl ** (g + 1) * d * eps_real + fast.delta_prime
        rhs = SAFETY_FACTOR * rhs_base * factor
        # the one-power-looser variant of the same bound, recorded for reference
        ratio_loose = lhs / (k_feat * r_decl ** (g + 2) * d * eps_real + fast.delta_prime)
        return lhs, rhs, 0.0, {
            "eps": eps_real,
            "R": r_decl,
            "g": g,
            "k": k_feat,
            "d": d,
            "L": length,
            "ratio_gplus2": ratio_loose,
        }

    return _run_trials("B4", trials, seed, trial)


def verify_upinterp_nonexpansive(trials: int, seed: int = 0) -> BoundReport:
    """Resampling never expands an entrywise gap (B-spline kernel).

    |up(X) - up(X')|_inf <= |X - X'|_inf with constant exactly 1.
    """
    factor = _sabotage("B5")

    def trial(rng: Rng):
        h = rng.integers(1, 7)
        w = rng.integers(1, 7)
        th = rng.integers(h, 4 * h + 1)
        tw = rng.integers(w, 4 * w + 1)
        d = rng.integers(1, 5)
        x = rng.uniform(-5.0, 5.0, (h, w, d))
        eps = 10.0 ** float(rng.uniform(-4.0, 0.0))
        xp = x + rng.uniform(-eps, eps, (h, w, d))
        a = up_interpolate(TokenMap(x), th, tw, KernelChoice.CUBIC_BSPLINE)
        b = up_interpolate(TokenMap(xp), th, tw, KernelChoice.CUBIC_BSPLINE)
        lhs = inf_norm_diff(a, b)
        rhs = inf_norm_diff(x, xp) * factor
        scale = float(np.max(np.abs(x)) + np.max(np.abs(xp)))
        return lhs, rhs, scale, {"eps": eps, "h": h, "w": w, "d": d}

    return _run_trials("B5", trials, seed, trial)


def verify_conv_error(trials: int, seed: int = 0) -> BoundReport:
    """Convolution Lipschitz bound with the explicit constant 9 c_in R."""
    factor = _sabotage("C1")

    def trial(rng: Rng):
        h = rng.integers(1, 7)
        w = rng.integers(1, 7)
        c_in = rng.integers(1, 5)
        c_out = rng.integers(1, 5)
        r = float(rng.uniform(1.05, 2.0))
        ks = ConvKernelSet(
            kernels=rng.uniform(-r, r, (c_out, 3, 3, c_in)),
            bias=float(rng.uniform(-1.0, 1.0)),
        )
        x = rng.uniform(-3.0, 3.0, (h, w, c_in))
        eps = 10.0 ** float(rng.uniform(-4.0, 0.0))
        xp = x + rng.uniform(-eps, eps, (h, w, c_in))
        eps_real = float(np.max(np.abs(xp - x)))
        lhs = inf_norm_diff(conv_forward(TokenMap(x), ks), conv_forward(TokenMap(xp), ks))
        rhs = 9.0 * c_in * eps_real * r * factor
        scale = 9.0 * c_in * r * (float(np.max(np.abs(x))) + eps_real)
        return lhs, rhs, scale, {"eps": eps_real, "R": r, "c_in": c_in, "c_out": c_out}

    return _run_trials("C1", trials, seed, trial)


def verify_mode_equivalence(trials: int, config: RunConfig | None = None, seed: int = 0) -> BoundReport:
    """End-to-end FAST image within the composed bound of the EXACT image.

    Depth is capped at 4 scales: the exact-mode oracle materializes full
    attention, so deeper configs belong to `generate`, not to a trial loop.
    """
    factor = _sabotage("mode_equiv")
    if config is None:
        config = RunConfig(num_scales=3)
    config = replace(config, num_scales=min(config.num_scales, 4))

    def trial(rng: Rng):
        run_cfg = replace(config, seed=rng.stream % 2**32)
        try:
            fast = run_end_to_end(run_cfg, ExecutionMode.FAST)
        except RangeTooLarge:
            return None
        exact = run_end_to_end(run_cfg, ExecutionMode.EXACT)
        lhs = inf_norm_diff(fast.image, exact.image)
        rhs = fast.trace.composed_bound * factor
        return lhs, rhs, 0.0, {"seed": run_cfg.seed, "K": run_cfg.num_scales}

    return _run_trials("mode_equiv", trials, seed, trial)


def verify_all(trials: int = 1000, seed: int = 0, config: RunConfig | None = None) -> dict:
    """Run every suite; trial counts scale down for the composed suites."""
    b4_trials = max(200, trials // 5)
    me_trials = max(20, trials // 50)
    return {
        "B1": verify_poly_lipschitz(trials, seed),
        "B2": verify_inner_product(trials, seed),
        "B4": verify_attention_error(b4_trials, seed),
        "B5": verify_upinterp_nonexpansive(trials, seed),
        "C1": verify_conv_error(trials, seed),
        "mode_equiv": verify_mode_equivalence(me_trials, config, seed),
    }
