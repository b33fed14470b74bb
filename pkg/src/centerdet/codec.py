"""Ground-truth encoding and detection decoding.

Encoding maps boxes to head-resolution targets: each object's center p is
downsampled by the output stride R to an integer cell q = floor(p/R); the
class heatmap gets a separable Gaussian bump that is exactly 1 at q, with
per-axis spreads of one sixth of the downsampled width/height (so the value
three spreads out, at half the object extent, is exp(-4.5)); overlapping
bumps combine by elementwise max.  The size map stores the downsampled
width/height at q and the offset map stores the fractional part of p/R.

Decoding inverts this: cells equal to their 3x3-neighborhood max are hot
spots, the top-K by score become centers, and box corners are recovered
from the size/offset maps then scaled back up by R.  For boxes whose q
cells are pairwise distinct the round trip is exact up to float32 storage.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .tensorops import maxpool2d


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixels with class id and confidence."""
    x1: float
    y1: float
    x2: float
    y2: float
    class_id: int
    score: float = 1.0

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})")
        if self.class_id < 0:
            raise ValueError(f"negative class id {self.class_id}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Targets:
    """Encoded training targets for one image."""
    heatmap: np.ndarray    # [C, H/R, W/R] in [0, 1]
    wh: np.ndarray         # [2, H/R, W/R]; (width, height) at center cells
    offset: np.ndarray     # [2, H/R, W/R]; (dx, dy) fractional parts at centers
    pos_mask: np.ndarray   # [H/R, W/R] bool
    num_objects: int
    collisions: int = 0    # objects whose q cell was already taken


@dataclass(frozen=True)
class Peak:
    """A heatmap hot spot: integer cell, class channel and score."""
    x: int
    y: int
    class_id: int
    score: float


def center_point(box: BBox, down_ratio: int) -> Tuple[tuple, tuple, tuple]:
    """Center p, downsampled integer cell q and fractional remainder.

    q * R + frac * R reconstructs p exactly (up to float64 rounding).
    """
    px = (box.x1 + box.x2) / 2.0
    py = (box.y1 + box.y2) / 2.0
    qx = int(np.floor(px / down_ratio))
    qy = int(np.floor(py / down_ratio))
    return (px, py), (qx, qy), (px / down_ratio - qx, py / down_ratio - qy)


def gaussian_sigmas(w_ds: float, h_ds: float) -> Tuple[float, float]:
    """Per-axis spreads: one sixth of the downsampled extents."""
    if w_ds <= 0 or h_ds <= 0:
        raise ValueError(f"object extents must be positive, got {(w_ds, h_ds)}")
    return w_ds / 6.0, h_ds / 6.0


def _axis_profile(q: int, sigma: float, extent: int) -> Tuple[np.ndarray, int]:
    # support truncated at radius 3*sigma; the center cell is always kept
    radius = int(np.floor(3.0 * sigma))
    lo = max(0, q - radius)
    hi = min(extent - 1, q + radius)
    d = np.arange(lo, hi + 1, dtype=np.float64) - q
    return np.exp(-(d * d) / (2.0 * sigma * sigma)), lo


def encode_targets(boxes: Sequence[BBox], width: int, height: int,
                   num_classes: int, down_ratio: int) -> Targets:
    """Convert boxes to heatmap/size/offset targets at 1/R resolution."""
    if width % down_ratio or height % down_ratio:
        raise ValueError(
            f"image extent {width}x{height} must be divisible by the "
            f"output stride {down_ratio}")
    gw, gh = width // down_ratio, height // down_ratio
    heatmap = np.zeros((num_classes, gh, gw), dtype=np.float32)
    wh = np.zeros((2, gh, gw), dtype=np.float32)
    offset = np.zeros((2, gh, gw), dtype=np.float32)
    pos_mask = np.zeros((gh, gw), dtype=bool)
    collisions = 0

    for i, box in enumerate(boxes):
        if box.class_id >= num_classes:
            raise ValueError(
                f"box {i}: class id {box.class_id} exceeds {num_classes} classes")
        if box.x1 < 0 or box.y1 < 0 or box.x2 > width or box.y2 > height:
            raise ValueError(
                f"box {i} ({box.x1}, {box.y1}, {box.x2}, {box.y2}) lies "
                f"outside the {width}x{height} image")
        _, (qx, qy), frac = center_point(box, down_ratio)
        w_ds = box.width / down_ratio
        h_ds = box.height / down_ratio
        sx, sy = gaussian_sigmas(w_ds, h_ds)

        gx, x0 = _axis_profile(qx, sx, gw)
        gy, y0 = _axis_profile(qy, sy, gh)
        bump = (gy[:, None] * gx[None, :]).astype(np.float32)
        region = heatmap[box.class_id, y0:y0 + len(gy), x0:x0 + len(gx)]
        np.maximum(region, bump, out=region)
        heatmap[box.class_id, qy, qx] = 1.0

        if pos_mask[qy, qx]:
            collisions += 1
        wh[:, qy, qx] = (w_ds, h_ds)
        offset[:, qy, qx] = frac
        pos_mask[qy, qx] = True

    return Targets(heatmap=heatmap, wh=wh, offset=offset, pos_mask=pos_mask,
                   num_objects=len(boxes), collisions=collisions)


def extract_peaks(heatmap: np.ndarray, top_k: int) -> List[Peak]:
    """Cells equal to their 3x3-neighborhood max, best top_k across channels.

    Border neighborhoods are padded with -inf, so edge cells compete only
    against real neighbors.  Plateaus count (comparison is >=) and ties in
    score break by (channel, row, column) ascending.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    if heatmap.ndim != 3:
        raise ValueError(f"expected heatmap [C,h,w], got {heatmap.shape}")
    pooled = maxpool2d(heatmap, k=3, stride=1, padding=1)
    cells = np.argwhere(heatmap == pooled)  # (c, y, x) in ascending order
    scores = heatmap[cells[:, 0], cells[:, 1], cells[:, 2]]
    order = np.argsort(-scores, kind="stable")[:top_k]
    return [Peak(x=int(cells[i, 2]), y=int(cells[i, 1]),
                 class_id=int(cells[i, 0]), score=float(scores[i]))
            for i in order]


def decode_boxes(peaks: Sequence[Peak], wh: np.ndarray, offset: np.ndarray,
                 down_ratio: int) -> Tuple[List[BBox], int]:
    """Recover boxes from peaks plus the size/offset maps.

    Corner coordinates are center + offset -/+ half extent, all scaled by
    the output stride.  Peaks whose predicted extent is not positive cannot
    form a box; they are dropped and counted in the second return value.
    """
    if wh.shape != offset.shape or wh.shape[0] != 2:
        raise ValueError(
            f"size map {wh.shape} and offset map {offset.shape} must both "
            f"be [2,h,w]")
    boxes: List[BBox] = []
    dropped = 0
    _, mh, mw = wh.shape
    for p in peaks:
        if not (0 <= p.x < mw and 0 <= p.y < mh):
            raise ValueError(f"peak ({p.x}, {p.y}) outside map {mh}x{mw}")
        w = float(wh[0, p.y, p.x])
        h = float(wh[1, p.y, p.x])
        if w <= 0 or h <= 0:
            dropped += 1
            continue
        cx = p.x + float(offset[0, p.y, p.x])
        cy = p.y + float(offset[1, p.y, p.x])
        boxes.append(BBox(
            x1=(cx - w / 2.0) * down_ratio, y1=(cy - h / 2.0) * down_ratio,
            x2=(cx + w / 2.0) * down_ratio, y2=(cy + h / 2.0) * down_ratio,
            class_id=p.class_id, score=p.score))
    return boxes, dropped


def clip_box_to_window(box: BBox, x0: float, y0: float, x1: float, y1: float,
                       min_area_frac: float = 0.3):
    """Intersect a box with a window, keeping it only if enough survives.

    Returns the clipped box in window-local coordinates, or None when the
    surviving area is below min_area_frac of the original box.
    """
    cx1, cy1 = max(box.x1, x0), max(box.y1, y0)
    cx2, cy2 = min(box.x2, x1), min(box.y2, y1)
    if cx1 >= cx2 or cy1 >= cy2:
        return None
    if (cx2 - cx1) * (cy2 - cy1) < min_area_frac * box.area:
        return None
    return BBox(x1=cx1 - x0, y1=cy1 - y0, x2=cx2 - x0, y2=cy2 - y0,
                class_id=box.class_id, score=box.score)
