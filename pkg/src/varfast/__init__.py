"""Deterministic next-scale autoregressive pipeline with interchangeable
exact and low-rank attention, executable error-bound suites, and an
operation-counting scaling bench."""

from .attention_exact import AttentionParams, attn_exact, attn_matrix
from .attention_fast import (
    ApproxConfig,
    FastAttentionResult,
    LowRankFactors,
    PolyFeatureMap,
    attn_fast,
    attn_fast_detailed,
    build_factors,
    feature_map,
    select_degree,
)
from .config import RunConfig, load_config
from .conv import ConvKernelSet, ResNetBlock, conv_forward, resnet_forward
from .counting import (
    OpCounter,
    OpCounts,
    attn_exact_cost,
    attn_fast_cost,
    conv_cost,
    feature_count,
    up_interp_cost,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    InsufficientData,
    InvalidTarget,
    NonPositiveRowSum,
    NumericOverflow,
    RangeTooLarge,
    TooLargeToMaterialize,
    VarfastError,
)
from .pipeline import (
    DecoderSpec,
    ExecutionMode,
    RunResult,
    RunTrace,
    VarModel,
    build_model,
    decode,
    reconstruct_feature_map,
    run_end_to_end,
    var_transformer,
)
from .pyramid import (
    KernelChoice,
    PyramidSchedule,
    kernel_eval,
    pyramid_up,
    up_interpolate,
)
from .rng import Rng
from .scaling import BenchResult, ScalingReport, bench_sweep, fit_exponent, phase_sweep
from .tensors import (
    FlatMatrix,
    TokenMap,
    clip_entries,
    flatten,
    inf_norm,
    inf_norm_diff,
    reshape_to_pyramid,
)
from .verify import (
    BoundReport,
    verify_all,
    verify_attention_error,
    verify_conv_error,
    verify_inner_product,
    verify_mode_equivalence,
    verify_poly_lipschitz,
    verify_upinterp_nonexpansive,
)

__version__ = "0.1.0"
