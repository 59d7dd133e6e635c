"""Three-stage generation pipeline, runnable with exact or low-rank attention.

Stage 1 alternates attention over the flattened pyramid with one-scale
upsampling; stage 2 upsamples every scale to full size, convolves, and sums;
stage 3 is a constant-depth decoder over the feature map. FAST mode swaps
every attention layer for the low-rank approximation and, alongside the
image, produces a composed max-norm bound on its distance from the EXACT
image: per-layer budgets (delta') enter at each attention layer and are
propagated through downstream layers by explicit Lipschitz factors computed
from the realized weights and activations.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .attention_exact import AttentionParams, attn_exact
from .attention_fast import ApproxConfig, attn_fast_detailed
from .config import RunConfig
from .conv import ConvKernelSet, ResNetBlock, conv_forward, resnet_forward
from .counting import (
    STAGE1_ATTN,
    STAGE1_UP,
    STAGE2,
    STAGE3,
    OpCounter,
    map_sum_cost,
)
from .errors import DimensionMismatch
from .pyramid import (
    KernelChoice,
    PyramidSchedule,
    pyramid_up,
    up_gain,
    up_interpolate,
)
from .rng import Rng
from .tensors import FlatMatrix, TokenMap, clip_array, flatten, reshape_to_pyramid


class ExecutionMode(enum.Enum):
    EXACT = "exact"
    FAST = "fast"

    @classmethod
    def from_name(cls, name: str) -> "ExecutionMode":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown mode {name!r}; expected 'exact' or 'fast'")


RESNET = "resnet"
ATTENTION = "attention"
UPINTERP = "upinterp"
FINAL_CONV = "final_conv"
_LAYER_KINDS = (RESNET, ATTENTION, UPINTERP, FINAL_CONV)

DECODER_PRESETS = {
    "default": (RESNET, ATTENTION, UPINTERP, RESNET, FINAL_CONV),
    "attn-only": (ATTENTION,),
    "conv-only": (FINAL_CONV,),
}

MAX_DECODER_DEPTH = 8


@dataclass(frozen=True)
class DecoderSpec:
    """Ordered decoder layer kinds; depth is constant and small."""

    layers: tuple = DECODER_PRESETS["default"]
    out_channels: int = 3

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not 1 <= len(layers) <= MAX_DECODER_DEPTH:
            raise ValueError(f"decoder depth must be 1..{MAX_DECODER_DEPTH}")
        for kind in layers:
            if kind not in _LAYER_KINDS:
                raise ValueError(f"unknown decoder layer kind {kind!r}")
        if FINAL_CONV in layers and layers.index(FINAL_CONV) != len(layers) - 1:
            raise ValueError("final_conv must be the last decoder layer")
        if self.out_channels < 1:
            raise ValueError("out_channels must be positive")

    @classmethod
    def preset(cls, name: str, out_channels: int = 3) -> "DecoderSpec":
        if name not in DECODER_PRESETS:
            raise ValueError(f"unknown decoder preset {name!r}")
        return cls(layers=DECODER_PRESETS[name], out_channels=out_channels)


@dataclass(frozen=True)
class DecoderLayer:
    kind: str
    resnet: ResNetBlock | None = None
    attn: AttentionParams | None = None
    conv: ConvKernelSet | None = None


@dataclass(frozen=True)
class VarModel:
    """Seeded weights for all three stages plus the approximation config."""

    schedule: PyramidSchedule
    kernel_choice: KernelChoice
    x_init: TokenMap
    attn_params: tuple
    stage2_convs: tuple
    decoder_spec: DecoderSpec
    decoder_layers: tuple
    approx: ApproxConfig

    def __post_init__(self):
        k = self.schedule.num_scales
        if len(self.attn_params) != k or len(self.stage2_convs) != k:
            raise DimensionMismatch(
                f"model needs {k} attention parameter sets and {k} reconstruction convolutions"
            )
        if self.x_init.height != 1 or self.x_init.width != 1:
            raise DimensionMismatch("x_init must be a 1x1 token map")

    @property
    def d(self) -> int:
        return self.x_init.channels


def _seeded_attn_params(rng: Rng, d: int, r_bound: float) -> AttentionParams:
    mats = [clip_array(rng.uniform(-r_bound, r_bound, (d, d)), r_bound) for _ in range(3)]
    return AttentionParams(w_q=mats[0], w_k=mats[1], w_v=mats[2], entry_bound=r_bound)


def build_model(config: RunConfig) -> VarModel:
    """Draw all weights from fixed substreams of the config seed.

    Stream layout: 1 seeds the initial token, 10+k the step-k attention,
    100+k the stage-2 convolutions, 200+i the decoder layers. Identical
    configs therefore build bit-identical models in either mode.
    """
    schedule = PyramidSchedule(alpha=config.alpha, num_scales=config.num_scales)
    kernel_choice = KernelChoice.from_name(config.kernel)
    rng = Rng(config.seed)
    r = config.r_bound
    d = config.d

    x_init = TokenMap(clip_array(rng.split(1).uniform(-r, r, (1, 1, d)), r))
    attn_params = tuple(
        _seeded_attn_params(rng.split(10 + k), d, r) for k in range(1, config.num_scales + 1)
    )
    stage2_convs = tuple(
        ConvKernelSet.seeded(rng.split(100 + k), d, d, r)
        for k in range(1, config.num_scales + 1)
    )
    spec = DecoderSpec.preset(config.decoder)
    layers = []
    for i, kind in enumerate(spec.layers):
        sub = rng.split(200 + i)
        if kind == RESNET:
            layers.append(DecoderLayer(kind, resnet=ResNetBlock.seeded(sub, d, r)))
        elif kind == ATTENTION:
            layers.append(DecoderLayer(kind, attn=_seeded_attn_params(sub, d, r)))
        elif kind == FINAL_CONV:
            layers.append(
                DecoderLayer(kind, conv=ConvKernelSet.seeded(sub, d, spec.out_channels, r))
            )
        else:
            layers.append(DecoderLayer(kind))
    approx = ApproxConfig(delta=config.delta, g_max=config.g_max, r_bound=r)
    return VarModel(
        schedule=schedule,
        kernel_choice=kernel_choice,
        x_init=x_init,
        attn_params=attn_params,
        stage2_convs=stage2_convs,
        decoder_spec=spec,
        decoder_layers=tuple(layers),
        approx=approx,
    )


def _conv_abs_gain(ks: ConvKernelSet) -> float:
    """Exact Lipschitz factor of one convolution: max_l sum |K^l|."""
    return float(np.abs(ks.kernels).sum(axis=(1, 2, 3)).max())


class BoundTracker:
    """Composed max-norm budget for the FAST-vs-EXACT pipeline difference.

    Maintains eps, a proven bound on the entrywise gap between the fast
    run's current value and what the exact run holds at the same point.
    Attention layers add their own budget delta' and amplify the incoming
    gap through an explicit softmax sensitivity bound; affine layers
    multiply by their realized Lipschitz factors.
    """

    def __init__(self):
        self.eps = 0.0

    def fast_attention(self, x: FlatMatrix, p: AttentionParams, delta_prime: float):
        d = x.cols
        q_inf = float(np.max(np.abs(x.data @ p.w_q)))
        k_inf = float(np.max(np.abs(x.data @ p.w_k)))
        v_inf = float(np.max(np.abs(x.data @ p.w_v)))
        wq = float(np.max(np.abs(p.w_q)))
        wk = float(np.max(np.abs(p.w_k)))
        wv = float(np.max(np.abs(p.w_v)))
        eq = d * wq * self.eps
        ek = d * wk * self.eps
        ev = d * wv * self.eps
        # score gap, then row-stochastic weight drift exp(2*es) - 1
        es = d * (eq * (k_inf + ek) + q_inf * ek)
        p_shift = math.expm1(2.0 * es)
        self.eps = delta_prime + p_shift * (v_inf + ev) + ev

    def up(self, gain: float):
        self.eps *= gain

    def conv(self, ks: ConvKernelSet):
        self.eps *= _conv_abs_gain(ks)

    def resnet(self, block: ResNetBlock):
        self.eps *= 1.0 + _conv_abs_gain(block.conv1) * _conv_abs_gain(block.conv2)

    def stage2(self, model: VarModel, eps_in: float):
        total = 0.0
        n = model.schedule.final_size
        for k in range(1, model.schedule.num_scales + 1):
            s = model.schedule.size(k)
            gain = up_gain(s, s, n, n, model.kernel_choice)
            total += _conv_abs_gain(model.stage2_convs[k - 1]) * gain * eps_in
        self.eps = total


def var_transformer(
    model: VarModel,
    mode: ExecutionMode,
    counter: OpCounter | None = None,
    steps: list | None = None,
    tracker: BoundTracker | None = None,
) -> FlatMatrix:
    """Stage 1: attention over the growing pyramid, one scale per step.

    Step k attends over all tokens of scales 1..k, then (except at the last
    step) the output is split back into maps and upsampled one scale. The
    returned matrix stacks every scale of the final step, coarse first.
    """
    schedule = model.schedule
    z = flatten([model.x_init])
    out = None
    for k in range(1, schedule.num_scales + 1):
        params = model.attn_params[k - 1]
        record = {"stage": STAGE1_ATTN, "k": k, "tokens": z.rows}
        if mode is ExecutionMode.EXACT:
            out = attn_exact(z, params, counter, STAGE1_ATTN)
        else:
            res = attn_fast_detailed(z, params, model.approx, counter=counter, stage=STAGE1_ATTN)
            out = res.output
            record.update(
                degree=res.degree,
                k_feat=res.k_feat,
                score_bound=res.score_bound,
                delta_prime=res.delta_prime,
            )
            if tracker is not None:
                tracker.fast_attention(z, params, res.delta_prime)
                record["eps_bound"] = tracker.eps
        if steps is not None:
            steps.append(record)
        if k < schedule.num_scales:
            maps = reshape_to_pyramid(out, schedule, k)
            ys = pyramid_up(model.x_init, maps, schedule, model.kernel_choice, counter, STAGE1_UP)
            if tracker is not None:
                gain = max(
                    up_gain(schedule.size(r), schedule.size(r), schedule.size(r + 1), schedule.size(r + 1), model.kernel_choice)
                    for r in range(1, k + 1)
                )
                tracker.up(gain)
            z = flatten(ys)
    return out


def reconstruct_feature_map(
    maps,
    model: VarModel,
    counter: OpCounter | None = None,
    tracker: BoundTracker | None = None,
) -> TokenMap:
    """Stage 2: upsample every scale to full size, convolve, and sum.

    Summation runs in ascending scale order so the result is deterministic.
    """
    maps = list(maps)
    schedule = model.schedule
    if len(maps) != schedule.num_scales:
        raise DimensionMismatch(
            f"expected {schedule.num_scales} maps, got {len(maps)}"
        )
    n = schedule.final_size
    eps_in = tracker.eps if tracker is not None else 0.0
    acc = np.zeros((n, n, model.d), dtype=np.float64)
    for k, m in enumerate(maps, start=1):
        want = schedule.size(k)
        if m.height != want or m.width != want:
            raise DimensionMismatch(
                f"map {k} is {m.height}x{m.width}, schedule wants {want}x{want}"
            )
        up = up_interpolate(m, n, n, model.kernel_choice, counter, STAGE2)
        conv = conv_forward(up, model.stage2_convs[k - 1], counter, STAGE2)
        acc += conv.data
    if counter is not None:
        counter.add(STAGE2, map_sum_cost(n, n, model.d, schedule.num_scales))
    if tracker is not None:
        tracker.stage2(model, eps_in)
    return TokenMap(acc)


def decode(
    fm: TokenMap,
    model: VarModel,
    mode: ExecutionMode,
    counter: OpCounter | None = None,
    steps: list | None = None,
    tracker: BoundTracker | None = None,
) -> TokenMap:
    """Stage 3: run the decoder layer list over the feature map.

    Attention layers flatten the current map to a token sequence and reshape
    back; upsampling doubles both spatial axes; the optional final
    convolution sets the output channel count.
    """
    if fm.channels != model.d:
        raise DimensionMismatch(f"feature map has {fm.channels} channels, model wants {model.d}")
    cur = fm
    for layer in model.decoder_layers:
        if layer.kind == RESNET:
            cur = resnet_forward(cur, layer.resnet, counter, STAGE3)
            if tracker is not None:
                tracker.resnet(layer.resnet)
        elif layer.kind == ATTENTION:
            flat = FlatMatrix(cur.data.reshape(cur.height * cur.width, cur.channels))
            record = {"stage": STAGE3, "k": None, "tokens": flat.rows}
            if mode is ExecutionMode.EXACT:
                out = attn_exact(flat, layer.attn, counter, STAGE3)
            else:
                res = attn_fast_detailed(flat, layer.attn, model.approx, counter=counter, stage=STAGE3)
                out = res.output
                record.update(
                    degree=res.degree,
                    k_feat=res.k_feat,
                    score_bound=res.score_bound,
                    delta_prime=res.delta_prime,
                )
                if tracker is not None:
                    tracker.fast_attention(flat, layer.attn, res.delta_prime)
                    record["eps_bound"] = tracker.eps
            if steps is not None:
                steps.append(record)
            cur = TokenMap(out.data.reshape(cur.height, cur.width, cur.channels))
        elif layer.kind == UPINTERP:
            th, tw = 2 * cur.height, 2 * cur.width
            if tracker is not None:
                tracker.up(up_gain(cur.height, cur.width, th, tw, model.kernel_choice))
            cur = up_interpolate(cur, th, tw, model.kernel_choice, counter, STAGE3)
        elif layer.kind == FINAL_CONV:
            cur = conv_forward(cur, layer.conv, counter, STAGE3)
            if tracker is not None:
                tracker.conv(layer.conv)
    return cur


@dataclass
class RunTrace:
    """Everything one pipeline run reports besides the image itself."""

    config: dict
    mode: str
    n: int
    final_tokens: int
    steps: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    composed_bound: float | None = None
    image_shape: tuple = ()
    image_inf_norm: float = 0.0
    wall_ms: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "schema": "varfast-trace-v1",
            "config": self.config,
            "mode": self.mode,
            "n": self.n,
            "final_tokens": self.final_tokens,
            "steps": self.steps,
            "counters": self.counters,
            "composed_bound": self.composed_bound,
            "image_shape": list(self.image_shape),
            "image_inf_norm": self.image_inf_norm,
            "wall_ms": self.wall_ms,
        }


@dataclass(frozen=True)
class RunResult:
    image: TokenMap
    trace: RunTrace


def run_end_to_end(config: RunConfig, mode: ExecutionMode | str | None = None) -> RunResult:
    """Build the seeded model and run all three stages in the given mode."""
    if mode is None:
        mode = config.mode
    if isinstance(mode, str):
        mode = ExecutionMode.from_name(mode)
    model = build_model(config)
    counter = OpCounter()
    tracker = BoundTracker() if mode is ExecutionMode.FAST else None
    steps: list = []
    walls = {}

    t0 = time.perf_counter()
    s1 = var_transformer(model, mode, counter, steps, tracker)
    t1 = time.perf_counter()
    maps = reshape_to_pyramid(s1, model.schedule, model.schedule.num_scales)
    fm = reconstruct_feature_map(maps, model, counter, tracker)
    t2 = time.perf_counter()
    image = decode(fm, model, mode, counter, steps, tracker)
    t3 = time.perf_counter()

    walls["stage1"] = (t1 - t0) * 1e3
    walls["stage2"] = (t2 - t1) * 1e3
    walls["stage3"] = (t3 - t2) * 1e3
    walls["total"] = (t3 - t0) * 1e3

    trace = RunTrace(
        config=config.as_dict(),
        mode=mode.value,
        n=model.schedule.final_size,
        final_tokens=s1.rows,
        steps=steps,
        counters=counter.as_dict(),
        composed_bound=tracker.eps if tracker is not None else None,
        image_shape=image.shape,
        image_inf_norm=float(np.max(np.abs(image.data))),
        wall_ms=walls,
    )
    return RunResult(image=image, trace=trace)
