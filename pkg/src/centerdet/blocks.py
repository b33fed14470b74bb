"""Network building blocks.

The convolution unit used throughout the backbone runs three parallel
branches at train time (3x3, 1x3 and 3x1 kernels, each with its own bias)
and collapses them into a single 3x3 kernel for inference by embedding the
strip kernels into the middle row/column and summing the biases.  Both
forms produce the same map up to float rounding, so fused weights trade
nothing but the branch diversity used during training.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tensorops import (concat_channels, conv2d, global_avg_pool, linear,
                        relu, sigmoid, upsample_nearest)


@dataclass
class FusedConv:
    """A plain convolution: one kernel plus per-channel bias."""
    kernel: np.ndarray
    bias: np.ndarray


@dataclass
class AsymConvParams:
    """Three-branch asymmetric convolution parameters.

    All kernels share [C_out, C_in]; shapes are 3x3, 1x3 and 3x1.
    """
    k3x3: np.ndarray
    b3x3: np.ndarray
    k1x3: np.ndarray
    b1x3: np.ndarray
    k3x1: np.ndarray
    b3x1: np.ndarray

    def __post_init__(self):
        co, ci = self.k3x3.shape[:2]
        if self.k3x3.shape[2:] != (3, 3):
            raise ValueError(f"square branch must be 3x3, got {self.k3x3.shape}")
        if self.k1x3.shape != (co, ci, 1, 3):
            raise ValueError(
                f"row branch shape {self.k1x3.shape} does not match "
                f"square branch {self.k3x3.shape}")
        if self.k3x1.shape != (co, ci, 3, 1):
            raise ValueError(
                f"column branch shape {self.k3x1.shape} does not match "
                f"square branch {self.k3x3.shape}")

    @property
    def out_channels(self) -> int:
        return self.k3x3.shape[0]


def asym_conv_train(x: np.ndarray, p: AsymConvParams, stride: int = 1) -> np.ndarray:
    """Sum of the three branch convolutions (train-time form).

    Branch paddings (1,1), (0,1) and (1,0) make all outputs congruent.
    """
    out = conv2d(x, p.k3x3, p.b3x3, stride=stride, padding=(1, 1))
    out = out + conv2d(x, p.k1x3, p.b1x3, stride=stride, padding=(0, 1))
    out = out + conv2d(x, p.k3x1, p.b3x1, stride=stride, padding=(1, 0))
    return out


def fuse_asym_conv(p: AsymConvParams) -> FusedConv:
    """Collapse the three branches into one 3x3 kernel and one bias.

    The 1x3 kernel lands in the middle row, the 3x1 kernel in the middle
    column, and the biases add.
    """
    kernel = p.k3x3.copy()
    kernel[:, :, 1:2, :] += p.k1x3
    kernel[:, :, :, 1:2] += p.k3x1
    bias = p.b3x3 + p.b1x3 + p.b3x1
    return FusedConv(kernel=kernel, bias=bias)


def asym_conv_fused(x: np.ndarray, fused: FusedConv, stride: int = 1) -> np.ndarray:
    """Run the fused single-kernel form of an asymmetric conv unit."""
    return conv2d(x, fused.kernel, fused.bias, stride=stride, padding=1)


def conv_unit(x: np.ndarray, unit, stride: int = 1) -> np.ndarray:
    """Apply either a train-form AsymConvParams or a FusedConv."""
    if isinstance(unit, AsymConvParams):
        return asym_conv_train(x, unit, stride=stride)
    return asym_conv_fused(x, unit, stride=stride)


@dataclass
class ResidualBlockParams:
    """Two conv units plus an optional 1x1 projection on the shortcut."""
    conv1: object
    conv2: object
    stride: int = 1
    projection: Optional[FusedConv] = None


def _unit_channels(unit) -> tuple:
    k = unit.k3x3 if isinstance(unit, AsymConvParams) else unit.kernel
    return k.shape[0], k.shape[1]


def residual_forward(x: np.ndarray, p: ResidualBlockParams) -> np.ndarray:
    """relu(shortcut(x) + conv2(relu(conv1(x))))."""
    out_ch, in_ch = _unit_channels(p.conv1)
    if x.shape[0] != in_ch:
        raise ValueError(
            f"residual block expects {in_ch} input channels, got map {x.shape}")
    needs_projection = p.stride != 1 or in_ch != out_ch
    if needs_projection and p.projection is None:
        raise ValueError(
            f"residual block with stride {p.stride} and channels "
            f"{in_ch}->{out_ch} requires a shortcut projection")

    y = conv_unit(x, p.conv1, stride=p.stride)
    y = relu(y)
    y = conv_unit(y, p.conv2, stride=1)
    if p.projection is not None:
        shortcut = conv2d(x, p.projection.kernel, p.projection.bias,
                          stride=p.stride, padding=0)
    else:
        shortcut = x
    return relu(shortcut + y)


@dataclass
class SqueezeExciteParams:
    """Channel attention: pooled descriptor -> bottleneck -> sigmoid gates."""
    reduce_weight: np.ndarray
    reduce_bias: np.ndarray
    expand_weight: np.ndarray
    expand_bias: np.ndarray

    def __post_init__(self):
        c = self.expand_weight.shape[0]
        mid = self.reduce_weight.shape[0]
        if self.reduce_weight.shape != (mid, c):
            raise ValueError(
                f"reduce weight {self.reduce_weight.shape} inconsistent with "
                f"expand weight {self.expand_weight.shape}")
        if self.expand_weight.shape != (c, mid):
            raise ValueError(
                f"expand weight {self.expand_weight.shape} must be "
                f"[{c}, {mid}]")

    @property
    def channels(self) -> int:
        return self.expand_weight.shape[0]


def squeeze_excite_gates(x: np.ndarray, p: SqueezeExciteParams) -> np.ndarray:
    """Per-channel gate values, strictly inside (0, 1), as float64 [C]."""
    if x.shape[0] != p.channels:
        raise ValueError(
            f"squeeze-excite built for {p.channels} channels, got map {x.shape}")
    desc = global_avg_pool(x)
    hidden = relu(linear(desc, p.reduce_weight, p.reduce_bias))
    gates = sigmoid(linear(hidden, p.expand_weight, p.expand_bias))
    tiny = np.nextafter(0.0, 1.0)
    top = np.nextafter(1.0, 0.0)
    return np.clip(gates, tiny, top)


def squeeze_excite(x: np.ndarray, p: SqueezeExciteParams) -> np.ndarray:
    """Scale each channel of x by its gate."""
    gates = squeeze_excite_gates(x, p).astype(x.dtype)
    return x * gates[:, None, None]


@dataclass
class FusionParams:
    """Pyramid fusion: upsample + concat -> channel attention -> 1x1 reduce."""
    se: SqueezeExciteParams
    reduce: FusedConv


def fuse_pyramid(levels, p: FusionParams) -> np.ndarray:
    """Fuse pyramid levels into one map at the finest level's extent.

    Levels are concatenated in argument order (callers pass deepest first);
    each is nearest-upsampled to the largest spatial extent, which must be
    an integer multiple of every level's extent.
    """
    if not levels:
        raise ValueError("fuse_pyramid needs at least one level")
    target_h = max(l.shape[1] for l in levels)
    target_w = max(l.shape[2] for l in levels)
    resized = []
    for i, level in enumerate(levels):
        _, h, w = level.shape
        if target_h % h or target_w % w:
            raise ValueError(
                f"level {i} extent {(h, w)} does not divide target "
                f"{(target_h, target_w)} by an integer factor")
        fh, fw = target_h // h, target_w // w
        if fh != fw:
            raise ValueError(
                f"level {i} needs anisotropic upsample {(fh, fw)}; "
                f"levels must share aspect ratio")
        resized.append(upsample_nearest(level, fh))
    fused = concat_channels(resized)
    fused = squeeze_excite(fused, p.se)
    return conv2d(fused, p.reduce.kernel, p.reduce.bias, stride=1, padding=0)
