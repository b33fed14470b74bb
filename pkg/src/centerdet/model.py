"""Detector assembly: backbone, pyramid fusion and prediction heads.

Layout: a 3x3 stride-2 stem plus 2x2 stride-2 max pool, then four stages of
two residual blocks with channel widths base*(1,2,4,8) and stage strides
1/2/2/2.  The four stage outputs (1/4 .. 1/32 of the input) are fused at
the 1/4 level, so head maps are input/4 in each axis and the input must be
a multiple of 32 per axis.  Three heads (center heatmap, size, offset) each
run a 3x3 conv + relu + 1x1 conv on the fused map.

Weights are drawn from a single SplitMix64 stream, each kernel uniform in
[-s, s] with s = 1/sqrt(fan_in), consumed in declaration order; biases are
zero except the final heatmap bias, which starts at -2.19 so the initial
heatmap sits near 0.1.
"""

from dataclasses import dataclass, replace
from typing import List

import numpy as np

from .blocks import (AsymConvParams, FusedConv, FusionParams,
                     ResidualBlockParams, SqueezeExciteParams,
                     fuse_asym_conv, fuse_pyramid, residual_forward)
from .rng import SplitMix64
from .tensorops import conv2d, maxpool2d, relu, sigmoid

STAGE_MULTIPLIERS = (1, 2, 4, 8)
STAGE_STRIDES = (1, 2, 2, 2)
BLOCKS_PER_STAGE = 2
INPUT_MULTIPLE = 32   # stem(2) * pool(2) * stage strides (1*2*2*2)
OUTPUT_STRIDE = 4     # finest fused level sits at input/4
HEATMAP_BIAS_INIT = -2.19
HEATMAP_EPS = 1e-7


@dataclass
class HeadParams:
    conv3: FusedConv
    conv1: FusedConv


@dataclass
class ModelParams:
    stem: FusedConv
    stages: List[List[ResidualBlockParams]]
    fusion: FusionParams
    heatmap_head: HeadParams
    size_head: HeadParams
    offset_head: HeadParams
    num_classes: int
    base_width: int
    head_width: int
    se_ratio: int

    @property
    def fused(self) -> bool:
        return isinstance(self.stages[0][0].conv1, FusedConv)


class _Init:
    """Sequential parameter initializer over one SplitMix64 stream."""

    def __init__(self, seed: int):
        self.rng = SplitMix64(seed)

    def kernel(self, shape) -> np.ndarray:
        fan_in = int(np.prod(shape[1:]))
        bound = 1.0 / np.sqrt(fan_in)
        vals = self.rng.uniforms(int(np.prod(shape))) * 2.0 * bound - bound
        return vals.reshape(shape).astype(np.float32)

    def zeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=np.float32)

    def asym_conv(self, cin: int, cout: int) -> AsymConvParams:
        return AsymConvParams(
            k3x3=self.kernel((cout, cin, 3, 3)), b3x3=self.zeros(cout),
            k1x3=self.kernel((cout, cin, 1, 3)), b1x3=self.zeros(cout),
            k3x1=self.kernel((cout, cin, 3, 1)), b3x1=self.zeros(cout))

    def plain_conv(self, cin: int, cout: int, k: int) -> FusedConv:
        return FusedConv(kernel=self.kernel((cout, cin, k, k)),
                         bias=self.zeros(cout))


def init_model_params(num_classes: int, base_width: int = 64,
                      head_width: int = 64, se_ratio: int = 16,
                      seed: int = 0) -> ModelParams:
    """Build train-form parameters from a seed (bit-reproducible)."""
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    concat_ch = base_width * sum(STAGE_MULTIPLIERS)
    if concat_ch % se_ratio:
        raise ValueError(
            f"concatenated width {concat_ch} not divisible by "
            f"squeeze-excite ratio {se_ratio}")
    ini = _Init(seed)

    stem = ini.plain_conv(3, base_width, 3)

    stages = []
    in_ch = base_width
    for mult, stride in zip(STAGE_MULTIPLIERS, STAGE_STRIDES):
        out_ch = base_width * mult
        blocks = []
        for b in range(BLOCKS_PER_STAGE):
            s = stride if b == 0 else 1
            needs_proj = s != 1 or in_ch != out_ch
            blocks.append(ResidualBlockParams(
                conv1=ini.asym_conv(in_ch, out_ch),
                conv2=ini.asym_conv(out_ch, out_ch),
                stride=s,
                projection=ini.plain_conv(in_ch, out_ch, 1) if needs_proj else None))
            in_ch = out_ch
        stages.append(blocks)

    mid = concat_ch // se_ratio
    se = SqueezeExciteParams(
        reduce_weight=ini.kernel((mid, concat_ch)), reduce_bias=ini.zeros(mid),
        expand_weight=ini.kernel((concat_ch, mid)), expand_bias=ini.zeros(concat_ch))
    fusion = FusionParams(se=se, reduce=ini.plain_conv(concat_ch, head_width, 1))

    def head(out_ch):
        return HeadParams(conv3=ini.plain_conv(head_width, head_width, 3),
                          conv1=ini.plain_conv(head_width, out_ch, 1))

    heatmap_head = head(num_classes)
    heatmap_head.conv1.bias = np.full(num_classes, HEATMAP_BIAS_INIT,
                                      dtype=np.float32)
    return ModelParams(
        stem=stem, stages=stages, fusion=fusion,
        heatmap_head=heatmap_head, size_head=head(2), offset_head=head(2),
        num_classes=num_classes, base_width=base_width,
        head_width=head_width, se_ratio=se_ratio)


def _head_forward(x: np.ndarray, head: HeadParams) -> np.ndarray:
    y = relu(conv2d(x, head.conv3.kernel, head.conv3.bias, stride=1, padding=1))
    return conv2d(y, head.conv1.kernel, head.conv1.bias, stride=1, padding=0)


def model_forward(image: np.ndarray, params: ModelParams):
    """Run the detector on one image [3,H,W].

    Returns (heatmap [C,H/4,W/4] strictly inside (0,1), size map [2,...],
    offset map [2,...]).
    """
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected RGB image [3,H,W], got {image.shape}")
    _, h, w = image.shape
    if h % INPUT_MULTIPLE or w % INPUT_MULTIPLE:
        raise ValueError(
            f"input extent {h}x{w} must be a multiple of {INPUT_MULTIPLE} "
            f"per axis")

    x = relu(conv2d(image, params.stem.kernel, params.stem.bias,
                    stride=2, padding=1))
    x = maxpool2d(x, k=2, stride=2, padding=0)

    level_maps = []
    for blocks in params.stages:
        for block in blocks:
            x = residual_forward(x, block)
        level_maps.append(x)

    fused = fuse_pyramid(list(reversed(level_maps)), params.fusion)

    heat = sigmoid(_head_forward(fused, params.heatmap_head))
    heat = np.clip(heat, HEATMAP_EPS, 1.0 - HEATMAP_EPS)
    wh = _head_forward(fused, params.size_head)
    offset = _head_forward(fused, params.offset_head)
    return heat, wh, offset


def fuse_model_params(params: ModelParams) -> ModelParams:
    """Return an inference-form copy with every asymmetric unit collapsed."""
    if params.fused:
        raise ValueError("model parameters are already in fused form")

    def fuse_block(b: ResidualBlockParams) -> ResidualBlockParams:
        return replace(b, conv1=fuse_asym_conv(b.conv1),
                       conv2=fuse_asym_conv(b.conv2))

    return replace(params,
                   stages=[[fuse_block(b) for b in blocks]
                           for blocks in params.stages])


class Detector:
    """Per-tile predictor backed by model parameters.

    The origin/scale frame hints are accepted for interface parity with
    oracle predictors and ignored: the network sees pixels only.
    """

    size_multiple = INPUT_MULTIPLE
    down_ratio = OUTPUT_STRIDE

    def __init__(self, params: ModelParams):
        self.params = params

    @property
    def num_classes(self) -> int:
        return self.params.num_classes

    def predict(self, image: np.ndarray, origin=(0, 0), scale: float = 1.0):
        return model_forward(image, self.params)


# --- named-tensor (de)serialization -------------------------------------

def _conv_entries(prefix: str, unit) -> list:
    if isinstance(unit, AsymConvParams):
        return [(f"{prefix}.k3x3", unit.k3x3), (f"{prefix}.b3x3", unit.b3x3),
                (f"{prefix}.k1x3", unit.k1x3), (f"{prefix}.b1x3", unit.b1x3),
                (f"{prefix}.k3x1", unit.k3x1), (f"{prefix}.b3x1", unit.b3x1)]
    return [(f"{prefix}.kernel", unit.kernel), (f"{prefix}.bias", unit.bias)]


def params_to_tensors(params: ModelParams) -> dict:
    """Flatten parameters into an ordered {name: array} mapping."""
    entries = _conv_entries("stem", params.stem)
    for i, blocks in enumerate(params.stages):
        for j, block in enumerate(blocks):
            entries += _conv_entries(f"stages.{i}.{j}.conv1", block.conv1)
            entries += _conv_entries(f"stages.{i}.{j}.conv2", block.conv2)
            if block.projection is not None:
                entries += _conv_entries(f"stages.{i}.{j}.proj", block.projection)
    se = params.fusion.se
    entries += [("fusion.se.reduce.weight", se.reduce_weight),
                ("fusion.se.reduce.bias", se.reduce_bias),
                ("fusion.se.expand.weight", se.expand_weight),
                ("fusion.se.expand.bias", se.expand_bias)]
    entries += _conv_entries("fusion.reduce", params.fusion.reduce)
    for name, head in (("heatmap", params.heatmap_head),
                       ("size", params.size_head),
                       ("offset", params.offset_head)):
        entries += _conv_entries(f"heads.{name}.conv3", head.conv3)
        entries += _conv_entries(f"heads.{name}.conv1", head.conv1)
    return dict(entries)


def model_manifest(params: ModelParams) -> dict:
    return {"kind": "detector",
            "form": "fused" if params.fused else "train",
            "num_classes": params.num_classes,
            "base_width": params.base_width,
            "head_width": params.head_width,
            "se_ratio": params.se_ratio}


def tensors_to_params(tensors: dict, manifest: dict) -> ModelParams:
    """Rebuild ModelParams from a named-tensor mapping and its manifest."""
    if manifest.get("kind") != "detector":
        raise ValueError(f"not a detector weight set: manifest {manifest}")
    form = manifest["form"]
    if form not in ("train", "fused"):
        raise ValueError(f"unknown weight form {form!r}")

    def take(name):
        if name not in tensors:
            raise ValueError(f"weight container is missing tensor {name!r}")
        return tensors[name]

    def conv(prefix):
        if form == "train":
            return AsymConvParams(
                k3x3=take(f"{prefix}.k3x3"), b3x3=take(f"{prefix}.b3x3"),
                k1x3=take(f"{prefix}.k1x3"), b1x3=take(f"{prefix}.b1x3"),
                k3x1=take(f"{prefix}.k3x1"), b3x1=take(f"{prefix}.b3x1"))
        return FusedConv(kernel=take(f"{prefix}.kernel"),
                         bias=take(f"{prefix}.bias"))

    def plain(prefix):
        return FusedConv(kernel=take(f"{prefix}.kernel"),
                         bias=take(f"{prefix}.bias"))

    stages = []
    in_ch = manifest["base_width"]
    for i, (mult, stride) in enumerate(zip(STAGE_MULTIPLIERS, STAGE_STRIDES)):
        out_ch = manifest["base_width"] * mult
        blocks = []
        for j in range(BLOCKS_PER_STAGE):
            s = stride if j == 0 else 1
            needs_proj = s != 1 or in_ch != out_ch
            blocks.append(ResidualBlockParams(
                conv1=conv(f"stages.{i}.{j}.conv1"),
                conv2=conv(f"stages.{i}.{j}.conv2"),
                stride=s,
                projection=plain(f"stages.{i}.{j}.proj") if needs_proj else None))
            in_ch = out_ch
        stages.append(blocks)

    se = SqueezeExciteParams(
        reduce_weight=take("fusion.se.reduce.weight"),
        reduce_bias=take("fusion.se.reduce.bias"),
        expand_weight=take("fusion.se.expand.weight"),
        expand_bias=take("fusion.se.expand.bias"))
    fusion = FusionParams(se=se, reduce=plain("fusion.reduce"))

    def head(name):
        return HeadParams(conv3=plain(f"heads.{name}.conv3"),
                          conv1=plain(f"heads.{name}.conv1"))

    return ModelParams(
        stem=plain("stem"), stages=stages, fusion=fusion,
        heatmap_head=head("heatmap"), size_head=head("size"),
        offset_head=head("offset"),
        num_classes=manifest["num_classes"],
        base_width=manifest["base_width"],
        head_width=manifest["head_width"],
        se_ratio=manifest["se_ratio"])
