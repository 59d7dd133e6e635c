"""3x3 stride-1 zero-padded convolution and the two-conv residual block.

Outputs keep the input's spatial size; out-of-range taps read zero. A single
scalar bias is shared across output channels. No activation functions: every
layer here is affine, which is what makes the entrywise error bound
9 * c_in * R * eps exact rather than asymptotic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import OpCounter, conv_cost, residual_add_cost
from .errors import DimensionMismatch, NumericOverflow
from .rng import Rng
from .tensors import TokenMap


@dataclass(frozen=True)
class ConvKernelSet:
    """c_out kernels of shape 3x3xc_in plus one shared scalar bias."""

    kernels: np.ndarray  # (c_out, 3, 3, c_in)
    bias: float

    def __post_init__(self):
        k = np.ascontiguousarray(self.kernels, dtype=np.float64)
        if k.ndim != 4 or k.shape[1] != 3 or k.shape[2] != 3:
            raise DimensionMismatch(f"kernels must be (c_out, 3, 3, c_in), got {k.shape}")
        if not np.isfinite(k).all() or not np.isfinite(self.bias):
            raise NumericOverflow("non-finite convolution weight")
        k.flags.writeable = False
        object.__setattr__(self, "kernels", k)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def c_out(self) -> int:
        return self.kernels.shape[0]

    @property
    def c_in(self) -> int:
        return self.kernels.shape[3]

    @property
    def weight_inf_norm(self) -> float:
        return float(np.max(np.abs(self.kernels)))

    @classmethod
    def seeded(cls, rng: Rng, c_in: int, c_out: int, r_bound: float) -> "ConvKernelSet":
        """Uniform [-r_bound, r_bound] kernels and bias from the given stream."""
        kernels = rng.uniform(-r_bound, r_bound, (c_out, 3, 3, c_in))
        bias = float(rng.uniform(-r_bound, r_bound))
        return cls(kernels=np.clip(kernels, -r_bound, r_bound), bias=bias)


@dataclass(frozen=True)
class ResNetBlock:
    """x + conv2(conv1(x)); both convs map d channels to d channels."""

    conv1: ConvKernelSet
    conv2: ConvKernelSet

    def __post_init__(self):
        if not (
            self.conv1.c_in
            == self.conv1.c_out
            == self.conv2.c_in
            == self.conv2.c_out
        ):
            raise DimensionMismatch("residual block needs matching d -> d convolutions")

    @classmethod
    def seeded(cls, rng: Rng, d: int, r_bound: float) -> "ResNetBlock":
        return cls(
            conv1=ConvKernelSet.seeded(rng, d, d, r_bound),
            conv2=ConvKernelSet.seeded(rng, d, d, r_bound),
        )


def conv_forward(
    x: TokenMap,
    ks: ConvKernelSet,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> TokenMap:
    """Apply the kernel set; accumulation order over taps is fixed."""
    if x.channels != ks.c_in:
        raise DimensionMismatch(
            f"input has {x.channels} channels, kernels expect {ks.c_in}"
        )
    h, w = x.height, x.width
    padded = np.zeros((h + 2, w + 2, ks.c_in), dtype=np.float64)
    padded[1 : h + 1, 1 : w + 1, :] = x.data
    out = np.full((h, w, ks.c_out), ks.bias, dtype=np.float64)
    for m in range(3):
        for n in range(3):
            window = padded[m : m + h, n : n + w, :]
            out += np.einsum("hwc,lc->hwl", window, ks.kernels[:, m, n, :])
    if counter is not None and stage is not None:
        counter.add(stage, conv_cost(h, w, ks.c_in, ks.c_out))
    return TokenMap(out)


def resnet_forward(
    x: TokenMap,
    block: ResNetBlock,
    counter: OpCounter | None = None,
    stage: str | None = None,
) -> TokenMap:
    """Identity residual around two convolutions."""
    if x.channels != block.conv1.c_in:
        raise DimensionMismatch(
            f"input has {x.channels} channels, block expects {block.conv1.c_in}"
        )
    inner = conv_forward(conv_forward(x, block.conv1, counter, stage), block.conv2, counter, stage)
    if counter is not None and stage is not None:
        counter.add(stage, residual_add_cost(x.height, x.width, x.channels))
    return TokenMap(x.data + inner.data)
