"""Low-rank attention via truncated-exponential monomial features.

Each attention matrix entry exp(q_i . k_j) is replaced by the Taylor
truncation T_g(q_i . k_j) = sum_{t<=g} (q_i . k_j)^t / t!. The truncation
factorizes exactly: with one feature per multiset m of coordinate indices,
|m| <= g, weighted by 1/sqrt(prod_c m_c!), the feature inner product
<phi(q), phi(k)> equals T_g(<q, k>) identically (multinomial theorem). The
layer therefore runs as skinny products U (V^T (X W_V)) at rank
k = C(d+g, g) and never forms the L x L matrix.

Degree selection: given a proven score bound b >= max |<q_i, k_j>| and a
relative target delta, the smallest g with

    b^(g+1) / (g+1)! <= delta * exp(-2b)

caps the Taylor remainder at delta * exp(-b), which is at most delta times
the smallest true attention entry. Every approximated entry is then within
relative delta of the truth and strictly positive, and the full layer output
lands within delta' = 2 delta ||X W_V||_inf / (1 - delta) of exact attention
in the max norm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .attention_exact import AttentionParams, _check_finite
from .counting import OpCounter, attn_fast_cost, feature_count
from .errors import (
    ConfigError,
    DimensionMismatch,
    NonPositiveRowSum,
    RangeTooLarge,
)
from .tensors import FlatMatrix

DEFAULT_G_MAX = 24


@dataclass(frozen=True)
class ApproxConfig:
    """Knobs for the low-rank path: target error, degree cap, entry bound."""

    delta: float
    g_max: int = DEFAULT_G_MAX
    r_bound: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.delta <= 0.1:
            raise ConfigError(f"delta must be in (0, 0.1], got {self.delta}")
        if int(self.g_max) != self.g_max or self.g_max < 1:
            raise ConfigError(f"g_max must be a positive integer, got {self.g_max}")
        if self.r_bound <= 0:
            raise ConfigError(f"r_bound must be positive, got {self.r_bound}")


def select_degree(b: float, delta: float, g_max: int = DEFAULT_G_MAX) -> int:
    """Smallest degree whose Taylor remainder meets the relative target.

    Evaluated in log space so large b cannot overflow. Monotone: the result
    never decreases in b and never increases in delta.
    """
    if b < 0:
        raise ValueError("score bound b must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if b == 0.0:
        return 0
    log_target = math.log(delta) - 2.0 * b
    log_b = math.log(b)
    for g in range(0, g_max + 1):
        if (g + 1) * log_b - math.lgamma(g + 2) <= log_target:
            return g
    raise RangeTooLarge(
        f"no degree <= {g_max} reaches relative error {delta} for score bound {b:.6g}"
    )


@dataclass(frozen=True)
class PolyFeatureMap:
    """Monomial feature basis for degree-g truncated exponentials.

    ``index_set`` holds one sorted index tuple per multiset, enumerated by
    total degree then lexicographically; ``coefficients`` carries the
    matching 1/sqrt(prod multiplicities!) weights.
    """

    degree: int
    dim: int
    index_set: tuple
    coefficients: np.ndarray

    @classmethod
    def build(cls, dim: int, degree: int) -> "PolyFeatureMap":
        if dim < 1 or degree < 0:
            raise ValueError("need dim >= 1 and degree >= 0")
        index_set = []
        coeffs = []
        for t in range(degree + 1):
            for combo in itertools.combinations_with_replacement(range(dim), t):
                index_set.append(combo)
                denom = 1.0
                for idx in set(combo):
                    denom *= math.factorial(combo.count(idx))
                coeffs.append(1.0 / math.sqrt(denom))
        fm = cls(
            degree=degree,
            dim=dim,
            index_set=tuple(index_set),
            coefficients=np.asarray(coeffs, dtype=np.float64),
        )
        assert fm.k_feat == feature_count(dim, degree)
        return fm

    @property
    def k_feat(self) -> int:
        return len(self.index_set)


def _feature_matrix(q: np.ndarray, fm: PolyFeatureMap) -> np.ndarray:
    """Rows of features for each row of ``q``; shares partial monomials.

    Each multiset's monomial extends the multiset missing its first index,
    so one multiply per feature column suffices.
    """
    if q.ndim != 2 or q.shape[1] != fm.dim:
        raise DimensionMismatch(f"expected (L, {fm.dim}) input, got {q.shape}")
    n = q.shape[0]
    cols = np.empty((n, fm.k_feat), dtype=np.float64)
    cache = {(): np.ones(n, dtype=np.float64)}
    for j, combo in enumerate(fm.index_set):
        if combo:
            col = cache[combo[1:]] * q[:, combo[0]]
            cache[combo] = col
        else:
            col = cache[()]
        cols[:, j] = col
    cols *= fm.coefficients[None, :]
    return cols


def feature_map(q: np.ndarray, fm: PolyFeatureMap) -> np.ndarray:
    """Feature vector of a single d-vector; <phi(q), phi(k)> = T_g(<q, k>)."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {q.shape}")
    if q.shape[0] != fm.dim:
        raise DimensionMismatch(f"vector length {q.shape[0]} != feature dim {fm.dim}")
    return _feature_matrix(q[None, :], fm)[0]


@dataclass(frozen=True)
class LowRankFactors:
    """Feature factor pair: U V^T approximates the attention matrix."""

    u: np.ndarray
    v: np.ndarray
    degree: int
    score_bound: float

    @property
    def k_feat(self) -> int:
        return self.u.shape[1]


def build_factors(
    x: FlatMatrix,
    p: AttentionParams,
    cfg: ApproxConfig,
    bound: float | None = None,
) -> LowRankFactors:
    """Construct the low-rank factors for one attention input.

    The degree comes from the realized score bound d * ||Q||_inf ||K||_inf
    (computed, not assumed); callers may pass a larger proven ``bound``
    instead, e.g. to pin the degree across runs.
    """
    if x.cols != p.dim:
        raise DimensionMismatch(f"input width {x.cols} != weight dim {p.dim}")
    q = x.data @ p.w_q
    k = x.data @ p.w_k
    _check_finite(q, "query projection")
    _check_finite(k, "key projection")
    d = x.cols
    b_actual = d * float(np.max(np.abs(q)) * np.max(np.abs(k)))
    if bound is None:
        b = b_actual
    else:
        if bound < b_actual:
            raise ConfigError(
                f"supplied score bound {bound:.6g} is below the realized bound {b_actual:.6g}"
            )
        b = float(bound)
    g = select_degree(b, cfg.delta, cfg.g_max)
    fm = PolyFeatureMap.build(d, g)
    u = _feature_matrix(q, fm)
    v = _feature_matrix(k, fm)
    row_sums = u @ (v.T @ np.ones(x.rows))
    if (row_sums <= 0.0).any():
        bad = int(np.argwhere(row_sums <= 0.0)[0][0])
        raise NonPositiveRowSum(f"approximate row sum non-positive at row {bad}")
    return LowRankFactors(u=u, v=v, degree=g, score_bound=b)


@dataclass(frozen=True)
class FastAttentionResult:
    """Output plus the per-layer approximation record."""

    output: FlatMatrix
    degree: int
    k_feat: int
    score_bound: float
    delta_prime: float


def attn_fast_detailed(
    x: FlatMatrix,
    p: AttentionParams,
    cfg: ApproxConfig,
    bound: float | None = None,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> FastAttentionResult:
    """Low-rank attention with its error budget.

    Evaluates D~^-1 (U (V^T (X W_V))) with D~ = diag(U (V^T 1)); the
    parenthesization keeps every intermediate at rank k_feat. The returned
    ``delta_prime`` bounds the max-norm gap to exact attention on the same
    input whenever degree selection succeeded.
    """
    factors = build_factors(x, p, cfg, bound=bound)
    v = x.data @ p.w_v
    _check_finite(v, "value projection")
    kv = factors.v.T @ v
    numer = factors.u @ kv
    denom = factors.u @ (factors.v.T @ np.ones(x.rows))
    if (denom <= 0.0).any():
        bad = int(np.argwhere(denom <= 0.0)[0][0])
        raise NonPositiveRowSum(f"approximate row sum non-positive at row {bad}")
    out = numer / denom[:, None]
    _check_finite(out, "fast attention output")
    if counter is not None and stage is not None:
        counter.add(stage, attn_fast_cost(x.rows, x.cols, factors.degree))
    v_inf = float(np.max(np.abs(v))) if v.size else 0.0
    delta_prime = 2.0 * cfg.delta * v_inf / (1.0 - cfg.delta)
    return FastAttentionResult(
        output=FlatMatrix(out),
        degree=factors.degree,
        k_feat=factors.k_feat,
        score_bound=factors.score_bound,
        delta_prime=delta_prime,
    )


def attn_fast(
    x: FlatMatrix,
    p: AttentionParams,
    cfg: ApproxConfig,
    bound: float | None = None,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> FlatMatrix:
    """Low-rank attention output; see :func:`attn_fast_detailed`."""
    return attn_fast_detailed(x, p, cfg, bound=bound, counter=counter, stage=stage).output
