"""Detection metrics: IoU, greedy matching and 11-point interpolated mAP.

Average precision per class interpolates precision at the eleven recalls
{0, 0.1, ..., 1.0}: each grid recall takes the best precision among curve
points at or beyond it (0 when none), and AP is the mean of the eleven.
mAP averages AP over classes that actually appear in the ground truth;
classes with detections but no ground truth score 0 and are flagged.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .codec import BBox

RECALL_GRID = tuple(i / 10.0 for i in range(11))


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def match_detections(dets: Sequence[BBox], gts: Sequence[BBox],
                     iou_thresh: float = 0.5) -> List[bool]:
    """Greedy TP/FP flags for detections already sorted by score descending.

    Each detection claims its best-overlap unmatched ground truth; it is a
    true positive when that overlap strictly exceeds iou_thresh, and the
    claimed ground truth is then consumed.  Equal-overlap ties go to the
    lowest ground-truth index.
    """
    taken = [False] * len(gts)
    flags = []
    for det in dets:
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = iou(det, gt)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou > iou_thresh:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def pr_curve(flags: Sequence[bool], total_gt: int) -> List[Tuple[float, float]]:
    """Cumulative (recall, precision) after each detection in score order.

    With no ground truth, recall is reported as 0 for every point; the
    caller decides how to score that class.
    """
    if total_gt < 0:
        raise ValueError(f"negative ground-truth count {total_gt}")
    points = []
    tp = 0
    for i, flag in enumerate(flags):
        if flag:
            tp += 1
        recall = tp / total_gt if total_gt > 0 else 0.0
        points.append((recall, tp / (i + 1)))
    return points


def ap_11point(curve: Sequence[Tuple[float, float]]) -> float:
    """Mean of interpolated precision over the 11-recall grid."""
    total = 0.0
    for r in RECALL_GRID:
        precisions = [p for rec, p in curve if rec >= r]
        total += max(precisions) if precisions else 0.0
    return total / len(RECALL_GRID)


@dataclass
class ClassResult:
    ap: float
    tp: int
    fp: int
    fn: int
    gt_count: int
    curve: List[Tuple[float, float]] = field(default_factory=list)


@dataclass
class EvalReport:
    """Per-class APs and counts plus their mean over represented classes."""
    per_class: Dict[int, ClassResult]
    mean_ap: float
    classes_in_gt: List[int]
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mAP": self.mean_ap,
            "classes_in_gt": self.classes_in_gt,
            "flags": list(self.flags),
            "per_class": {
                str(c): {"ap": r.ap, "tp": r.tp, "fp": r.fp, "fn": r.fn,
                         "gt_count": r.gt_count}
                for c, r in self.per_class.items()},
        }

    def to_table(self, class_names: Sequence[str] = None) -> str:
        lines = [f"{'class':<20} {'AP':>8} {'TP':>6} {'FP':>6} {'FN':>6} {'GT':>6}"]
        for c in sorted(self.per_class):
            r = self.per_class[c]
            name = class_names[c] if class_names else str(c)
            lines.append(f"{name:<20} {r.ap:>8.4f} {r.tp:>6} {r.fp:>6} "
                         f"{r.fn:>6} {r.gt_count:>6}")
        lines.append(f"{'mAP':<20} {self.mean_ap:>8.4f}")
        for note in self.flags:
            lines.append(f"note: {note}")
        return "\n".join(lines)


def evaluate(dets: Sequence[BBox], gts: Sequence[BBox], num_classes: int,
             iou_thresh: float = 0.5) -> EvalReport:
    """Score detections against ground truth, class by class."""
    for name, boxes in (("detection", dets), ("ground-truth", gts)):
        for b in boxes:
            if b.class_id >= num_classes:
                raise ValueError(
                    f"{name} box has class id {b.class_id} but only "
                    f"{num_classes} classes are configured")

    per_class: Dict[int, ClassResult] = {}
    flags: List[str] = []
    aps = []
    classes_in_gt = []
    for c in range(num_classes):
        class_gts = [g for g in gts if g.class_id == c]
        class_dets = [d for d in dets if d.class_id == c]
        class_dets.sort(key=lambda b: -b.score)  # stable: ties keep input order
        if not class_gts and not class_dets:
            continue
        matched = match_detections(class_dets, class_gts, iou_thresh)
        curve = pr_curve(matched, len(class_gts))
        tp = sum(matched)
        if class_gts:
            ap = ap_11point(curve)
            classes_in_gt.append(c)
            aps.append(ap)
        else:
            ap = 0.0
            flags.append(f"class {c}: detections but no ground truth; AP set to 0")
        per_class[c] = ClassResult(ap=ap, tp=tp, fp=len(class_dets) - tp,
                                   fn=len(class_gts) - tp,
                                   gt_count=len(class_gts), curve=curve)

    if aps:
        mean_ap = sum(aps) / len(aps)
    else:
        mean_ap = 0.0
        flags.append("no ground truth in any class; mAP set to 0")
    return EvalReport(per_class=per_class, mean_ap=mean_ap,
                      classes_in_gt=classes_in_gt, flags=flags)
