"""Synthetic scenes with exact ground truth, plus an oracle predictor.

Scenes render textured rectangles over low-amplitude noise; every pixel is
derived from a SplitMix64 stream seeded by the scene spec, and intensities are
quantized to the 8-bit grid so raster round trips are lossless.  The
oracle predictor stands in for a perfectly trained network: for any tile
frame it emits the encoded targets of the ground truth visible there,
which lets the decoder, pipeline and evaluator be exercised closed-loop.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .codec import BBox, encode_targets
from .rng import SplitMix64


@dataclass(frozen=True)
class SceneObject:
    class_id: int
    cx: int
    cy: int
    width: int
    height: int

    def bbox(self) -> BBox:
        return BBox(x1=self.cx - self.width / 2.0, y1=self.cy - self.height / 2.0,
                    x2=self.cx + self.width / 2.0, y2=self.cy + self.height / 2.0,
                    class_id=self.class_id, score=1.0)


@dataclass
class SceneSpec:
    width: int
    height: int
    num_classes: int
    objects: List[SceneObject] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        self.objects = [SceneObject(**o) if isinstance(o, dict) else o
                        for o in self.objects]
        for i, o in enumerate(self.objects):
            if o.width < 1 or o.height < 1:
                raise ValueError(f"object {i} has empty extent "
                                 f"{o.width}x{o.height}")
            if not (0 <= o.class_id < self.num_classes):
                raise ValueError(f"object {i} class {o.class_id} outside "
                                 f"[0, {self.num_classes})")
            b = o.bbox()
            if b.x1 < 0 or b.y1 < 0 or b.x2 > self.width or b.y2 > self.height:
                raise ValueError(
                    f"object {i} ({b.x1}, {b.y1}, {b.x2}, {b.y2}) outside "
                    f"the {self.width}x{self.height} scene")

    def ground_truth(self) -> List[BBox]:
        return [o.bbox() for o in self.objects]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        return cls(**json.loads(text))


def _class_tint(class_id: int, num_classes: int) -> np.ndarray:
    # fixed palette: well-separated, bright against the dim noise floor
    phase = 2.0 * np.pi * (class_id / max(num_classes, 1))
    rgb = 0.55 + 0.35 * np.cos(phase + np.array([0.0, 2.1, 4.2]))
    return rgb.astype(np.float64)


def generate_scene(spec: SceneSpec) -> Tuple[np.ndarray, List[BBox]]:
    """Render the scene to a float32 RGB image [3,H,W] plus ground truth.

    Identical specs produce bit-identical images; values are multiples of
    1/255 so 8-bit raster output reproduces the array exactly.
    """
    rng = SplitMix64(spec.seed)
    h, w = spec.height, spec.width
    image = rng.uniforms(3 * h * w).reshape(3, h, w) * 0.25

    for obj in spec.objects:
        b = obj.bbox()
        x1, y1 = int(np.floor(b.x1)), int(np.floor(b.y1))
        x2, y2 = int(np.ceil(b.x2)), int(np.ceil(b.y2))
        tint = _class_tint(obj.class_id, spec.num_classes)
        phase = rng.randint(0, 8)
        period = 4 + rng.randint(0, 5)
        ys = np.arange(y1, y2)[:, None]
        xs = np.arange(x1, x2)[None, :]
        stripes = (((ys + xs + phase) // (period // 2)) % 2).astype(np.float64)
        shade = 0.75 + 0.25 * stripes
        image[:, y1:y2, x1:x2] = tint[:, None, None] * shade[None, :, :]

    image = np.clip(image, 0.0, 1.0)
    image = np.round(image * 255.0) / 255.0
    return image.astype(np.float32), spec.ground_truth()


def random_scene_spec(seed: int, width: int, height: int, num_classes: int,
                      num_objects: int, min_size: int = 8, max_size: int = 48,
                      down_ratio: int = 4, cell_spacing: int = 1) -> SceneSpec:
    """Draw a scene whose objects occupy pairwise-distinct center cells.

    Centers are placed on distinct down_ratio-grid cells (spread further
    apart when cell_spacing > 1, which keeps cells distinct under modest
    rescaling).  Sizes are even so box corners are integer pixels.
    """
    if max_size < min_size:
        raise ValueError(f"max_size {max_size} below min_size {min_size}")
    rng = SplitMix64(seed)
    step = down_ratio * cell_spacing
    margin = max_size // 2 + step
    nx = (width - 2 * margin) // step
    ny = (height - 2 * margin) // step
    if num_objects > 0 and (nx < 1 or ny < 1):
        raise ValueError(
            f"scene {width}x{height} too small for objects up to {max_size}")
    if num_objects > nx * ny:
        raise ValueError(
            f"cannot place {num_objects} objects on a {nx}x{ny} center grid")

    objects = []
    for cell in rng.sample(nx * ny, num_objects) if num_objects else []:
        gx, gy = cell % nx, cell // nx
        cx = margin + gx * step + rng.randint(0, down_ratio)
        cy = margin + gy * step + rng.randint(0, down_ratio)
        ow = 2 * rng.randint(min_size // 2, max_size // 2 + 1)
        oh = 2 * rng.randint(min_size // 2, max_size // 2 + 1)
        objects.append(SceneObject(class_id=rng.randint(0, num_classes),
                                   cx=cx, cy=cy, width=ow, height=oh))
    return SceneSpec(width=width, height=height, num_classes=num_classes,
                     objects=objects, seed=seed)


def oracle_heads(gts: Sequence[BBox], width: int, height: int,
                 num_classes: int, down_ratio: int):
    """Perfect head maps: the encoded targets reinterpreted as outputs."""
    t = encode_targets(gts, width, height, num_classes, down_ratio)
    return t.heatmap, t.wh, t.offset


class OraclePredictor:
    """Ideal per-tile model backed by global ground truth.

    Given a tile frame (origin within the possibly rescaled image, plus
    the nominal scale factor), it emits oracle heads for exactly those
    objects lying fully inside the tile; objects only partially visible
    are treated as not detectable there, mirroring a detector that centers
    boxes on visible object centers.
    """

    def __init__(self, gts: Sequence[BBox], num_classes: int,
                 down_ratio: int = 4):
        self.gts = list(gts)
        self.num_classes = num_classes
        self.down_ratio = down_ratio
        self.size_multiple = down_ratio

    def predict(self, image: np.ndarray, origin=(0, 0), scale: float = 1.0):
        _, h, w = image.shape
        ox, oy = origin
        local = []
        for b in self.gts:
            x1, y1 = b.x1 * scale - ox, b.y1 * scale - oy
            x2, y2 = b.x2 * scale - ox, b.y2 * scale - oy
            if x1 >= 0 and y1 >= 0 and x2 <= w and y2 <= h:
                local.append(BBox(x1=x1, y1=y1, x2=x2, y2=y2,
                                  class_id=b.class_id, score=1.0))
        return oracle_heads(local, w, h, self.num_classes, self.down_ratio)
