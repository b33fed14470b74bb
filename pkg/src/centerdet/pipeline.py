"""Large-image inference: tiling, per-tile prediction, merge and NMS.

Images larger than one tile are covered by a sliding grid whose last
origin per axis is clamped so the final tile ends exactly at the image
edge; border tiles (and images smaller than one tile) are zero-padded to
the full tile extent.  Per-tile detections are translated back into the
image frame, pooled and deduplicated with class-wise greedy NMS.

Predictors are duck-typed: anything with a ``size_multiple`` attribute and
``predict(image, origin, scale) -> (heatmap, wh, offset)`` works.  The
network predictor ignores the frame hints; oracle predictors use them to
look up ground truth.  Tiles are independent, so they may be dispatched to
a thread pool; results are merged in grid order either way, keeping the
output independent of scheduling.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np

from .codec import BBox, decode_boxes, extract_peaks
from .config import ModelConfig
from .evaluation import iou
from .tensorops import bilinear_resize

FRAME_TILE = "tile"
FRAME_GLOBAL = "global"


@dataclass(frozen=True)
class Tile:
    """One crop window: origin in the source image plus padded extents."""
    origin_x: int
    origin_y: int
    width: int
    height: int


@dataclass
class DetectionSet:
    """Scored boxes in a single coordinate frame."""
    boxes: List[BBox]
    frame: str = FRAME_GLOBAL


def _axis_origins(extent: int, tile: int, stride: int) -> List[int]:
    if extent <= tile:
        return [0]
    origins = []
    o = 0
    while o + tile < extent:
        origins.append(o)
        o += stride
    origins.append(extent - tile)
    return origins


def split_tiles(width: int, height: int, tile: int = 1024,
                stride: int = 824) -> List[Tile]:
    """Tile frames covering the image; interior seams overlap tile-stride."""
    if width < 1 or height < 1:
        raise ValueError(f"image extents must be positive, got {width}x{height}")
    if not 0 < stride <= tile:
        raise ValueError(f"stride {stride} must be in (0, tile {tile}]")
    return [Tile(origin_x=ox, origin_y=oy, width=tile, height=tile)
            for oy in _axis_origins(height, tile, stride)
            for ox in _axis_origins(width, tile, stride)]


def extract_tile(image: np.ndarray, tile: Tile) -> np.ndarray:
    """Crop a tile from [C,H,W], zero-padding past the image border."""
    _, h, w = image.shape
    crop = image[:, tile.origin_y:min(tile.origin_y + tile.height, h),
                 tile.origin_x:min(tile.origin_x + tile.width, w)]
    pad_h = tile.height - crop.shape[1]
    pad_w = tile.width - crop.shape[2]
    if pad_h or pad_w:
        crop = np.pad(crop, ((0, 0), (0, pad_h), (0, pad_w)))
    return crop


def tile_to_global(dets: DetectionSet, tile: Tile) -> DetectionSet:
    """Translate tile-local detections into the source-image frame."""
    if dets.frame != FRAME_TILE:
        raise ValueError(
            f"expected tile-frame detections, got frame {dets.frame!r}")
    moved = [replace(b, x1=b.x1 + tile.origin_x, x2=b.x2 + tile.origin_x,
                     y1=b.y1 + tile.origin_y, y2=b.y2 + tile.origin_y)
             for b in dets.boxes]
    return DetectionSet(boxes=moved, frame=FRAME_GLOBAL)


def nms(dets: DetectionSet, iou_thresh: float = 0.45) -> DetectionSet:
    """Greedy class-wise suppression; output sorted by score descending.

    Repeatedly keeps the best remaining box and removes same-class boxes
    overlapping it with IoU strictly above the threshold.  Score ties keep
    insertion order, so the result is deterministic.
    """
    order = sorted(range(len(dets.boxes)), key=lambda i: -dets.boxes[i].score)
    alive = [True] * len(dets.boxes)
    kept: List[BBox] = []
    for pos, i in enumerate(order):
        if not alive[i]:
            continue
        box = dets.boxes[i]
        kept.append(box)
        for j in order[pos + 1:]:
            if not alive[j]:
                continue
            other = dets.boxes[j]
            if other.class_id == box.class_id and iou(box, other) > iou_thresh:
                alive[j] = False
    return DetectionSet(boxes=kept, frame=dets.frame)


def _infer_one_tile(image, tile, predictor, cfg: ModelConfig, scale: float):
    crop = extract_tile(image, tile)
    heat, wh, offset = predictor.predict(
        crop, origin=(tile.origin_x, tile.origin_y), scale=scale)
    expected = (tile.height // cfg.down_ratio, tile.width // cfg.down_ratio)
    if heat.shape[1:] != expected:
        raise ValueError(
            f"predictor produced head maps {heat.shape[1:]} but the "
            f"{tile.width}x{tile.height} tile at stride {cfg.down_ratio} "
            f"needs {expected}")
    peaks = extract_peaks(heat, cfg.max_detections)
    boxes, _ = decode_boxes(peaks, wh, offset, cfg.down_ratio)
    boxes = [b for b in boxes if b.score >= cfg.score_floor]
    return tile_to_global(DetectionSet(boxes, frame=FRAME_TILE), tile)


def infer_large_image(image: np.ndarray, predictor, cfg: ModelConfig,
                      scale: float = 1.0) -> DetectionSet:
    """Split, predict per tile, re-project, pool and NMS-merge."""
    if cfg.tile_size % predictor.size_multiple:
        raise ValueError(
            f"tile size {cfg.tile_size} is not a multiple of the "
            f"predictor's required {predictor.size_multiple}")
    _, h, w = image.shape
    tiles = split_tiles(w, h, cfg.tile_size, cfg.tile_stride)
    if cfg.workers > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            sets = list(pool.map(
                lambda t: _infer_one_tile(image, t, predictor, cfg, scale),
                tiles))
    else:
        sets = [_infer_one_tile(image, t, predictor, cfg, scale) for t in tiles]
    pooled = DetectionSet([b for s in sets for b in s.boxes], frame=FRAME_GLOBAL)
    return nms(pooled, cfg.nms_iou)


def scale_boxes(boxes: Sequence[BBox], factor: float) -> List[BBox]:
    """Scale box coordinates about the image origin."""
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return [replace(b, x1=b.x1 * factor, y1=b.y1 * factor,
                    x2=b.x2 * factor, y2=b.y2 * factor) for b in boxes]


def _round_up_multiple(value: float, multiple: int) -> int:
    # ceil so boxes scaled by the nominal factor stay inside the frame
    return max(multiple, int(np.ceil(value / multiple)) * multiple)


def multiscale_infer(image: np.ndarray, predictor, cfg: ModelConfig,
                     scales: Sequence[float] = None) -> DetectionSet:
    """Run tiled inference at several image scales and merge globally.

    Each scale resizes the image bilinearly (extents rounded up to the
    predictor's required multiple), infers, and maps the boxes back to the
    original frame by the nominal 1/scale before one final NMS pass.
    """
    if scales is None:
        scales = cfg.test_scales
    if not scales or any(s <= 0 for s in scales):
        raise ValueError(f"scales must be non-empty positive, got {scales}")
    _, h, w = image.shape
    pooled: List[BBox] = []
    for s in scales:
        if s == 1.0:
            scaled = image
        else:
            scaled = bilinear_resize(
                image,
                _round_up_multiple(h * s, predictor.size_multiple),
                _round_up_multiple(w * s, predictor.size_multiple))
        dets = infer_large_image(scaled, predictor, cfg, scale=s)
        pooled.extend(scale_boxes(dets.boxes, 1.0 / s))
    return nms(DetectionSet(pooled, frame=FRAME_GLOBAL), cfg.nms_iou)
