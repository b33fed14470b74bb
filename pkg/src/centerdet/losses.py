"""Training objective: penalty-reduced focal loss and masked L1 terms.

All losses are pure functions of the head outputs and return both the
scalar value and the exact analytic gradient with respect to the
prediction map.  Gradients stop at the head outputs; nothing here
backpropagates into network weights.
"""

import warnings
from dataclasses import dataclass

import numpy as np

PRED_EPS = 1e-7


@dataclass
class LossConfig:
    """Focal exponents, positive-sample threshold and branch weights.

    A heatmap target cell counts as positive when its value reaches
    pos_threshold (default 1.0: only exact object centers).  The total
    loss weighs the size branch by size_weight and the offset branch by
    offset_weight.
    """
    alpha: float = 2.0
    beta: float = 4.0
    pos_threshold: float = 1.0
    size_weight: float = 0.1
    offset_weight: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(
                f"focal exponents must be >= 0, got {(self.alpha, self.beta)}")
        if not 0.0 < self.pos_threshold <= 1.0:
            raise ValueError(
                f"pos_threshold must be in (0, 1], got {self.pos_threshold}")


def focal_loss(pred: np.ndarray, gt: np.ndarray, cfg: LossConfig,
               num_objects: int):
    """Classification loss over the center heatmap.

    Positive cells (gt >= pos_threshold) contribute (1-p)^alpha * log(p);
    the rest contribute (1-gt)^beta * p^alpha * log(1-p), so near-center
    cells are penalized less.  The sum is negated and averaged over the
    object count.  Predictions are clamped to [eps, 1-eps] before logs.

    Returns (loss, dloss/dpred) with the gradient taken at the clamped
    prediction.  num_objects == 0 yields a zero loss and gradient with a
    RuntimeWarning, since the average is undefined on empty images.
    """
    if pred.shape != gt.shape:
        raise ValueError(
            f"prediction {pred.shape} and target {gt.shape} shapes differ")
    if num_objects < 0:
        raise ValueError(f"negative object count {num_objects}")
    if num_objects == 0:
        warnings.warn("focal loss over zero objects; returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0, np.zeros_like(pred, dtype=np.float32)

    a, b = cfg.alpha, cfg.beta
    n = float(num_objects)
    p = np.clip(pred.astype(np.float64), PRED_EPS, 1.0 - PRED_EPS)
    y = gt.astype(np.float64)
    pos = y >= cfg.pos_threshold

    log_p = np.log(p)
    log_1p = np.log1p(-p)
    one_m_p = 1.0 - p

    pos_term = one_m_p ** a * log_p
    neg_w = (1.0 - y) ** b
    neg_term = neg_w * p ** a * log_1p
    loss = -(pos_term[pos].sum() + neg_term[~pos].sum()) / n

    grad_pos = (a * one_m_p ** (a - 1.0) * log_p - one_m_p ** a / p) / n
    grad_neg = neg_w * (p ** a / one_m_p - a * p ** (a - 1.0) * log_1p) / n
    grad = np.where(pos, grad_pos, grad_neg)
    return float(loss), grad.astype(np.float32)


def l1_loss_masked(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray,
                   num_objects: int):
    """L1 regression loss restricted to center cells.

    Sums |gt - pred| over both channels at masked cells and divides by the
    object count.  The gradient is -sign(gt - pred)/N at masked cells
    (0 at exact equality) and 0 elsewhere.
    """
    if pred.shape != gt.shape:
        raise ValueError(
            f"prediction {pred.shape} and target {gt.shape} shapes differ")
    if pred.ndim != 3 or mask.shape != pred.shape[1:]:
        raise ValueError(
            f"mask {mask.shape} does not match map spatial extent "
            f"{pred.shape}")
    if num_objects < 0:
        raise ValueError(f"negative object count {num_objects}")
    if num_objects == 0:
        warnings.warn("masked L1 loss over zero objects; returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0, np.zeros_like(pred, dtype=np.float32)

    n = float(num_objects)
    m = mask.astype(bool)[None, :, :]
    diff = gt.astype(np.float64) - pred.astype(np.float64)
    loss = np.abs(diff[np.broadcast_to(m, diff.shape)]).sum() / n
    grad = np.where(m, -np.sign(diff) / n, 0.0)
    return float(loss), grad.astype(np.float32)


def total_loss(heat_loss: float, size_loss: float, offset_loss: float,
               cfg: LossConfig) -> float:
    """Weighted sum of the three branch losses."""
    parts = (heat_loss, size_loss, offset_loss)
    if not all(np.isfinite(parts)):
        raise ValueError(f"branch losses must be finite, got {parts}")
    return heat_loss + cfg.size_weight * size_loss + cfg.offset_weight * offset_loss
