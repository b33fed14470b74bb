"""Plain-text exchange formats.

Annotations: one object per line, ``x1 y1 x2 y2 label`` with the label
resolved against the configured class list.  Detections: ``class score
x1 y1 x2 y2``.  Class lists: one name per line.  Numbers are written with
six decimals so equal inputs always produce byte-identical files.
"""

from typing import List, Sequence

from .codec import BBox


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def load_class_list(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        names = [line.strip() for line in f]
    names = [n for n in names if n]
    if not names:
        raise ValueError(f"class list {path} is empty")
    if len(set(names)) != len(names):
        raise ValueError(f"class list {path} contains duplicates")
    return names


def save_class_list(names: Sequence[str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for n in names:
            f.write(n + "\n")


def _resolve(label: str, class_names: Sequence[str], path: str,
             lineno: int) -> int:
    try:
        return class_names.index(label)
    except ValueError:
        raise ValueError(
            f"{path}:{lineno}: unknown class name {label!r}") from None


def load_annotations(path: str, class_names: Sequence[str]) -> List[BBox]:
    boxes = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(
                    f"{path}:{lineno}: expected 'x1 y1 x2 y2 label', "
                    f"got {line!r}")
            try:
                coords = [float(p) for p in parts[:4]]
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-numeric coordinate in {line!r}"
                ) from None
            class_id = _resolve(parts[4], class_names, path, lineno)
            try:
                boxes.append(BBox(*coords, class_id=class_id, score=1.0))
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
    return boxes


def save_annotations(boxes: Sequence[BBox], class_names: Sequence[str],
                     path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for b in boxes:
            f.write(f"{_fmt(b.x1)} {_fmt(b.y1)} {_fmt(b.x2)} {_fmt(b.y2)} "
                    f"{class_names[b.class_id]}\n")


def load_detections(path: str, class_names: Sequence[str]) -> List[BBox]:
    boxes = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(
                    f"{path}:{lineno}: expected 'class score x1 y1 x2 y2', "
                    f"got {line!r}")
            class_id = _resolve(parts[0], class_names, path, lineno)
            try:
                score = float(parts[1])
                coords = [float(p) for p in parts[2:]]
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-numeric value in {line!r}") from None
            try:
                boxes.append(BBox(*coords, class_id=class_id, score=score))
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
    return boxes


def save_detections(boxes: Sequence[BBox], class_names: Sequence[str],
                    path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for b in boxes:
            f.write(f"{class_names[b.class_id]} {_fmt(b.score)} "
                    f"{_fmt(b.x1)} {_fmt(b.y1)} {_fmt(b.x2)} {_fmt(b.y2)}\n")
