"""Uncompressed raster I/O (binary PPM) and box overlays.

Images travel as float32 [3,H,W] with values in [0,1]; files are 8-bit
binary PPM (P6, maxval 255).  Writing quantizes by rounding to the 1/255
grid, so arrays already on that grid round-trip exactly.
"""

from typing import Sequence

import numpy as np

from .codec import BBox


def save_ppm(image: np.ndarray, path: str) -> None:
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected RGB image [3,H,W], got {image.shape}")
    _, h, w = image.shape
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.transpose(1, 2, 0).tobytes())


def load_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    fields = []
    pos = 0
    # header: magic, width, height, maxval; '#' comments allowed between fields
    while len(fields) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        fields.append(blob[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path} is not binary PPM (magic {fields[0]!r})")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    raw = blob[pos:pos + 3 * w * h]
    if len(raw) != 3 * w * h:
        raise ValueError(f"{path}: expected {3 * w * h} pixel bytes, "
                         f"got {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)
    return (pixels.transpose(2, 0, 1).astype(np.float32) / 255.0)


def draw_boxes(image: np.ndarray, boxes: Sequence[BBox],
               num_classes: int) -> np.ndarray:
    """Copy of the image with one-pixel box outlines, colored by class."""
    out = image.copy()
    _, h, w = out.shape
    for b in boxes:
        phase = 2.0 * np.pi * (b.class_id / max(num_classes, 1))
        color = (0.5 + 0.5 * np.cos(phase + np.array([0.0, 2.1, 4.2])))
        x1 = int(np.clip(np.round(b.x1), 0, w - 1))
        x2 = int(np.clip(np.round(b.x2), 0, w - 1))
        y1 = int(np.clip(np.round(b.y1), 0, h - 1))
        y2 = int(np.clip(np.round(b.y2), 0, h - 1))
        col = color[:, None].astype(np.float32)
        out[:, y1, x1:x2 + 1] = col
        out[:, y2, x1:x2 + 1] = col
        out[:, y1:y2 + 1, x1] = col
        out[:, y1:y2 + 1, x2] = col
    return out
