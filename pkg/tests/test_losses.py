import numpy as np
import pytest

from centerdet.codec import BBox, encode_targets
from centerdet.losses import LossConfig, focal_loss, l1_loss_masked, total_loss
from centerdet.rng import SplitMix64

CFG = LossConfig()


def random_heatmaps(seed, shape=(3, 6, 6), positives=4):
    rng = SplitMix64(seed)
    n = int(np.prod(shape))
    pred = rng.uniforms(n).reshape(shape) * 0.9 + 0.05
    gt = rng.uniforms(n).reshape(shape) * 0.95
    flat = gt.reshape(-1)
    for idx in rng.sample(n, positives):
        flat[idx] = 1.0
    return pred, gt


def fd_gradient(loss_fn, pred, h=1e-4):
    grad = np.zeros_like(pred)
    for idx in np.ndindex(pred.shape):
        hi = pred.copy()
        hi[idx] += h
        lo = pred.copy()
        lo[idx] -= h
        grad[idx] = (loss_fn(hi) - loss_fn(lo)) / (2 * h)
    return grad


def assert_grad_close(analytic, numeric, rtol=1e-4, floor=1e-6):
    mask = np.abs(analytic) > floor
    rel = np.abs(numeric[mask] - analytic[mask]) / \
        np.maximum(np.abs(numeric[mask]), np.abs(analytic[mask]))
    assert rel.size == 0 or rel.max() <= rtol


class TestFocalLoss:
    def test_confident_positive_is_near_zero(self):
        pred = np.array([[[1.0 - 1e-7]]])
        gt = np.ones((1, 1, 1))
        loss, grad = focal_loss(pred, gt, CFG, 1)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_confident_negative_is_near_zero(self):
        pred = np.array([[[1e-7]]])
        gt = np.zeros((1, 1, 1))
        loss, _ = focal_loss(pred, gt, CFG, 1)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_loss_nonnegative_and_finite(self):
        for seed in range(10):
            pred, gt = random_heatmaps(seed)
            loss, grad = focal_loss(pred, gt, CFG, 4)
            assert loss >= 0 and np.isfinite(loss)
            assert np.isfinite(grad).all()

    def test_gradient_matches_finite_differences(self):
        for seed in range(5):
            pred, gt = random_heatmaps(seed)
            _, grad = focal_loss(pred, gt, CFG, 4)
            fd = fd_gradient(lambda p: focal_loss(p, gt, CFG, 4)[0], pred)
            assert_grad_close(grad, fd)

    def test_gradient_signs(self):
        pred, gt = random_heatmaps(3)
        _, grad = focal_loss(pred, gt, CFG, 4)
        pos = gt >= CFG.pos_threshold
        assert (grad[pos] < 0).all()
        assert (grad[~pos] > 0).all()

    def test_negative_weighting_decreases_with_gt(self):
        # same prediction, rising target value -> smaller negative-cell loss
        losses = []
        for y in (0.0, 0.3, 0.6, 0.9):
            loss, _ = focal_loss(np.array([[[0.4]]]), np.array([[[y]]]), CFG, 1)
            losses.append(loss)
        assert all(a >= b for a, b in zip(losses, losses[1:]))

    def test_reduces_to_standard_focal_on_one_hot(self):
        rng = SplitMix64(123)
        pred = rng.uniforms(4 * 5 * 5).reshape(4, 5, 5) * 0.9 + 0.05
        gt = np.zeros((4, 5, 5))
        gt[(0, 1, 3), (2, 0, 4), (1, 1, 2)] = 1.0
        n = 3
        loss, _ = focal_loss(pred, gt, CFG, n)
        pos = gt == 1.0
        ref = -(((1 - pred[pos]) ** CFG.alpha * np.log(pred[pos])).sum()
                + (pred[~pos] ** CFG.alpha * np.log(1 - pred[~pos])).sum()) / n
        assert loss == pytest.approx(ref, rel=1e-9)

    def test_zero_objects_flagged(self):
        pred, gt = random_heatmaps(0)
        with pytest.warns(RuntimeWarning, match="zero objects"):
            loss, grad = focal_loss(pred, gt, CFG, 0)
        assert loss == 0.0 and not grad.any()

    def test_saturated_predictions_stay_finite(self):
        pred = np.array([[[0.0, 1.0]]])
        gt = np.array([[[1.0, 0.0]]])
        loss, grad = focal_loss(pred, gt, CFG, 1)
        assert np.isfinite(loss) and np.isfinite(grad).all()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            focal_loss(np.zeros((1, 2, 2)), np.zeros((1, 3, 2)), CFG, 1)


class TestL1Masked:
    def test_perfect_prediction(self):
        pred = np.ones((2, 4, 4))
        mask = np.zeros((4, 4), bool)
        mask[1, 1] = True
        loss, grad = l1_loss_masked(pred, pred.copy(), mask, 1)
        assert loss == 0.0 and not grad.any()

    def test_forced_arithmetic(self):
        pred = np.zeros((2, 4, 4))
        gt = np.zeros((2, 4, 4))
        mask = np.zeros((4, 4), bool)
        mask[2, 3] = True
        gt[:, 2, 3] = (3.0, 4.0)
        loss, grad = l1_loss_masked(pred, gt, mask, 1)
        assert loss == 7.0
        assert grad[0, 2, 3] == -1.0 and grad[1, 2, 3] == -1.0

    def test_matches_loop_oracle_and_fd(self):
        rng = SplitMix64(9)
        for _ in range(5):
            pred = rng.uniforms(2 * 5 * 5).reshape(2, 5, 5) * 10
            gt = rng.uniforms(2 * 5 * 5).reshape(2, 5, 5) * 10
            mask = rng.uniforms(25).reshape(5, 5) > 0.5
            n = max(1, int(mask.sum()))
            loss, grad = l1_loss_masked(pred, gt, mask, n)
            ref = 0.0
            for c in range(2):
                for y in range(5):
                    for x in range(5):
                        if mask[y, x]:
                            ref += abs(float(gt[c, y, x]) - float(pred[c, y, x]))
            assert loss == pytest.approx(ref / n, rel=1e-12)
            fd = fd_gradient(lambda p: l1_loss_masked(p, gt, mask, n)[0], pred)
            assert_grad_close(grad, fd)

    def test_ignores_values_outside_mask(self):
        rng = SplitMix64(2)
        pred = rng.uniforms(2 * 4 * 4).reshape(2, 4, 4)
        gt = rng.uniforms(2 * 4 * 4).reshape(2, 4, 4)
        mask = np.zeros((4, 4), bool)
        mask[0, 0] = True
        loss_a, _ = l1_loss_masked(pred, gt, mask, 1)
        noisy = pred.copy()
        noisy[:, 1:, :] += 100.0
        loss_b, _ = l1_loss_masked(noisy, gt, mask, 1)
        assert loss_a == loss_b

    def test_zero_objects_flagged(self):
        with pytest.warns(RuntimeWarning, match="zero objects"):
            loss, grad = l1_loss_masked(np.ones((2, 2, 2)), np.ones((2, 2, 2)),
                                        np.zeros((2, 2), bool), 0)
        assert loss == 0.0 and not grad.any()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            l1_loss_masked(np.zeros((2, 4, 4)), np.zeros((2, 4, 4)),
                           np.zeros((3, 4), bool), 1)


class TestTotalLoss:
    def test_default_weights(self):
        assert total_loss(1.0, 10.0, 0.5, CFG) == pytest.approx(2.5)

    def test_all_zero(self):
        assert total_loss(0.0, 0.0, 0.0, CFG) == 0.0

    def test_degenerate_weights(self):
        cfg = LossConfig(size_weight=0.0, offset_weight=0.0)
        assert total_loss(3.0, 100.0, 100.0, cfg) == 3.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            total_loss(float("nan"), 0.0, 0.0, CFG)


class TestOnEncodedTargets:
    def test_losses_on_real_targets(self):
        boxes = [BBox(8, 8, 40, 40, class_id=0), BBox(80, 20, 120, 52, class_id=2)]
        t = encode_targets(boxes, 128, 128, 3, 4)
        rng = SplitMix64(4)
        pred_heat = rng.uniforms(t.heatmap.size).reshape(t.heatmap.shape) * 0.9 + 0.05
        pred_wh = rng.uniforms(t.wh.size).reshape(t.wh.shape) * 5
        pred_off = rng.uniforms(t.offset.size).reshape(t.offset.shape)
        lc, _ = focal_loss(pred_heat, t.heatmap, CFG, t.num_objects)
        lwh, _ = l1_loss_masked(pred_wh, t.wh, t.pos_mask, t.num_objects)
        loff, _ = l1_loss_masked(pred_off, t.offset, t.pos_mask, t.num_objects)
        combined = total_loss(lc, lwh, loff, CFG)
        assert combined == pytest.approx(lc + 0.1 * lwh + 1.0 * loff)
        assert combined > 0
