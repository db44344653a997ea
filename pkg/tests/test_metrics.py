import json

import numpy as np
import pytest

from pathseg.errors import InputError
from pathseg.foreground import ObjectnessTable
from pathseg.metrics import compute_metrics, pr_curve
from pathseg.superpixels import SuperpixelMap


def masks(t=3, h=8, w=10):
    return np.zeros((t, h, w), dtype=bool)


def test_perfect_prediction():
    gt = masks()
    gt[:, 2:5, 3:7] = True
    report = compute_metrics(gt.copy(), gt)
    assert report.f1 == 1.0 and report.precision == 1.0 and report.recall == 1.0
    assert all(fs.f1 == 1.0 for fs in report.per_frame)


def test_empty_prediction_degenerate():
    gt = masks()
    gt[:, 2:5, 3:7] = True
    report = compute_metrics(masks(), gt)
    assert report.f1 == 0.0 and report.precision == 0.0 and report.recall == 0.0


def test_equal_area_false_positives():
    gt = masks(t=1)
    gt[0, 0:4, 0:5] = True  # 20 px
    pred = gt.copy()
    pred[0, 4:8, 0:5] = True  # +20 px false positives
    report = compute_metrics(pred, gt)
    assert report.precision == pytest.approx(0.5)
    assert report.recall == pytest.approx(1.0)
    assert report.f1 == pytest.approx(2 / 3)


def test_pooled_not_macro_averaged():
    gt = masks(t=2)
    gt[0, 0:2, 0:2] = True     # small object frame
    gt[1, 0:6, 0:8] = True     # large object frame
    pred = masks(t=2)
    pred[1] = gt[1]            # only the large frame predicted
    report = compute_metrics(pred, gt)
    tp = gt[1].sum()
    fn = gt[0].sum()
    assert report.recall == pytest.approx(tp / (tp + fn))


def test_frame_permutation_invariance():
    rng = np.random.default_rng(0)
    gt = rng.random((4, 8, 10)) > 0.6
    pred = rng.random((4, 8, 10)) > 0.6
    perm = [2, 0, 3, 1]
    a = compute_metrics(pred, gt)
    b = compute_metrics(pred[perm], gt[perm])
    assert a.f1 == pytest.approx(b.f1)
    assert a.precision == pytest.approx(b.precision)


def test_shape_mismatch():
    with pytest.raises(InputError):
        compute_metrics(masks(t=2), masks(t=3))


def grid_sp(t=2, h=8, w=8):
    g = (np.arange(h * w).reshape(h, w) // 32).astype(np.int32)
    return SuperpixelMap(tuple(g for _ in range(t)))


def test_pr_curve_sweep():
    sp = grid_sp()
    gt = np.zeros((2, 8, 8), dtype=bool)
    gt[:, :4, :] = True  # superpixel 0 region
    rho = ObjectnessTable(tuple(np.array([0.9, 0.1]) for _ in range(2)))
    samples = pr_curve(rho, sp, gt, steps=11)
    assert len(samples) == 11
    # threshold 0 predicts everything: recall 1, precision 0.5
    assert samples[0].recall == pytest.approx(1.0)
    assert samples[0].precision == pytest.approx(0.5)
    # threshold above 0.9 predicts nothing
    assert samples[-1].recall == 0.0
    # the sweep contains the perfect threshold
    assert max(s.f1 for s in samples) == pytest.approx(1.0)


def test_report_includes_curve_and_serializes():
    sp = grid_sp()
    gt = np.zeros((2, 8, 8), dtype=bool)
    gt[:, :4, :] = True
    rho = ObjectnessTable(tuple(np.array([0.9, 0.1]) for _ in range(2)))
    report = compute_metrics(gt.copy(), gt, rho=rho, sp=sp)
    assert report.pr_curve and report.best_f1() == pytest.approx(1.0)
    lines = report.to_json_lines().strip().splitlines()
    kinds = {json.loads(l)["kind"] for l in lines}
    assert kinds == {"pooled", "frame", "pr_sample"}
    csv_text = report.to_csv()
    assert csv_text.startswith("scope,frame,f1,precision,recall")
    assert "pooled" in csv_text
