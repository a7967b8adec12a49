import json
import math

import numpy as np
import pytest

from lulcseg.errors import DimMismatch, EmptyComparison, MissingClass
from lulcseg.labels import IGNORE, OTHER, TARGET, LulcClass
from lulcseg.evaluate import (ConfusionMatrix, ErrorMapLegend, MetricsRow,
                              REFERENCE_ECOGNITION, aggregate, confusion,
                              error_map, mean_rows, metrics_from_confusion,
                              report)


def naive_confusion(pred, gt):
    """Literal per-pixel double loop, the definition written out."""
    tp = fp = fn = tn = 0
    for r in range(gt.shape[0]):
        for c in range(gt.shape[1]):
            if gt[r, c] == IGNORE:
                continue
            p, t = pred[r, c] == TARGET, gt[r, c] == TARGET
            if p and t:
                tp += 1
            elif p and not t:
                fp += 1
            elif not p and t:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


# ---------------------------------------------------------------- counting

def test_confusion_matches_double_loop_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h, w = rng.integers(1, 64, 2)
        pred = rng.choice([OTHER, TARGET], size=(h, w)).astype(np.uint8)
        gt = rng.choice([OTHER, TARGET, IGNORE], size=(h, w),
                        p=[0.4, 0.4, 0.2]).astype(np.uint8)
        cm = confusion(pred, gt)
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == naive_confusion(pred, gt)


def test_confusion_requires_same_dims():
    with pytest.raises(DimMismatch):
        confusion(np.zeros((3, 4), np.uint8), np.zeros((4, 3), np.uint8))


def test_confusion_addition_pools_counts():
    a = ConfusionMatrix(1, 2, 3, 4)
    b = ConfusionMatrix(10, 20, 30, 40)
    s = a + b
    assert (s.tp, s.fp, s.fn, s.tn) == (11, 22, 33, 44)
    assert s.total == 110


# ----------------------------------------------------------------- metrics

def test_worked_metrics_example():
    # tp=50 fp=10 fn=20 tn=20: acc .70, iou 50/80, recall 50/70,
    # precision 50/60, f1 = 2pr/(p+r)
    m = metrics_from_confusion(ConfusionMatrix(tp=50, fp=10, fn=20, tn=20))
    assert math.isclose(m.accuracy, 0.70, rel_tol=1e-12)
    assert math.isclose(m.iou, 0.625, rel_tol=1e-12)
    assert math.isclose(m.recall, 50 / 70, rel_tol=1e-12)
    assert math.isclose(m.precision, 50 / 60, rel_tol=1e-12)
    assert math.isclose(m.f1, 2 * (50 / 60) * (50 / 70) / (50 / 60 + 50 / 70),
                        rel_tol=1e-12)
    assert m.flags == ()


def test_f1_equals_iou_identity():
    # algebraic identity for pooled counts: f1 = 2*iou / (1 + iou)
    rng = np.random.default_rng(1)
    for _ in range(200):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 50, 4))
        if tp + fp + fn + tn == 0 or tp + fp + fn == 0:
            continue
        m = metrics_from_confusion(ConfusionMatrix(tp, fp, fn, tn))
        assert math.isclose(m.f1, 2 * m.iou / (1 + m.iou), rel_tol=1e-12, abs_tol=1e-12)


def test_zero_denominators_flagged_not_nan():
    # no target pixels anywhere: iou, recall, f1 all 0/0
    m = metrics_from_confusion(ConfusionMatrix(tp=0, fp=0, fn=0, tn=9))
    assert m.iou == 0.0 and m.recall == 0.0 and m.precision == 0.0 and m.f1 == 0.0
    assert set(m.flags) == {"iou", "recall", "precision", "f1"}
    assert m.accuracy == 1.0


def test_empty_comparison_rejected():
    with pytest.raises(EmptyComparison):
        metrics_from_confusion(ConfusionMatrix())


def test_mean_iou_is_two_class_average():
    cm = ConfusionMatrix(tp=6, fp=2, fn=1, tn=11)
    m = metrics_from_confusion(cm)
    other_iou = 11 / (11 + 1 + 2)
    assert math.isclose(m.mean_iou, (m.iou + other_iou) / 2, rel_tol=1e-12)


# ------------------------------------------------------------- aggregation

def make_row(seed):
    rng = np.random.default_rng(seed)
    tp, fp, fn, tn = (int(v) for v in rng.integers(1, 100, 4))
    return metrics_from_confusion(ConfusionMatrix(tp, fp, fn, tn))


def test_mean_rows_is_unweighted_columnwise_mean():
    rows = [make_row(s) for s in range(5)]
    mean = mean_rows(rows)
    for i, name in enumerate(("accuracy", "iou", "recall", "precision", "f1")):
        want = sum(r.values()[i] for r in rows) / len(rows)
        assert math.isclose(getattr(mean, name), want, rel_tol=1e-12), name


def test_aggregate_requires_all_four_classes():
    rows = {c: make_row(int(c)) for c in LulcClass}
    del rows[LulcClass.WATER]
    with pytest.raises(MissingClass) as exc:
        aggregate(rows)
    assert "water" in str(exc.value)


def test_aggregate_is_order_invariant():
    rows = {c: make_row(int(c)) for c in LulcClass}
    shuffled = dict(reversed(list(rows.items())))
    assert aggregate(rows) == aggregate(shuffled)


def test_published_average_row_reproduced():
    # the reported per-class results for this pipeline on the benchmark;
    # Average row printed alongside: 0.910 / 0.840 / 0.661 / 0.839 / 0.708
    rows = {
        LulcClass.FOREST: MetricsRow(0.915, 0.847, 0.565, 0.901, 0.640),
        LulcClass.BUILTUP: MetricsRow(0.914, 0.846, 0.506, 0.850, 0.626),
        LulcClass.FARMLAND: MetricsRow(0.845, 0.735, 0.711, 0.699, 0.691),
        LulcClass.WATER: MetricsRow(0.964, 0.932, 0.862, 0.905, 0.877),
    }
    avg = aggregate(rows)
    published = (0.910, 0.840, 0.661, 0.839, 0.708)
    for got, want in zip(avg.values(), published):
        assert abs(got - want) <= 0.0005 + 1e-12


def test_reference_workflow_rows_present():
    assert set(REFERENCE_ECOGNITION) == set(LulcClass)
    assert REFERENCE_ECOGNITION[LulcClass.WATER].recall == 0.69


# --------------------------------------------------------------- error map

def test_error_map_four_pixel_example():
    pred = np.array([[TARGET, TARGET], [OTHER, OTHER]], dtype=np.uint8)
    gt = np.array([[TARGET, OTHER], [TARGET, OTHER]], dtype=np.uint8)
    out = error_map(pred, gt)
    assert tuple(out[0, 0]) == (0, 255, 255)   # tp: cyan
    assert tuple(out[0, 1]) == (255, 0, 0)     # fp: red
    assert tuple(out[1, 0]) == (0, 0, 255)     # fn: blue
    assert tuple(out[1, 1]) == (128, 128, 128)  # tn: gray


def test_error_map_ignores_stay_background():
    pred = np.array([[TARGET]], dtype=np.uint8)
    gt = np.array([[IGNORE]], dtype=np.uint8)
    out = error_map(pred, gt)
    assert tuple(out[0, 0]) == (128, 128, 128)


def test_error_map_counts_match_confusion():
    rng = np.random.default_rng(2)
    pred = rng.choice([OTHER, TARGET], size=(50, 60)).astype(np.uint8)
    gt = rng.choice([OTHER, TARGET, IGNORE], size=(50, 60)).astype(np.uint8)
    out = error_map(pred, gt)
    cm = confusion(pred, gt)
    legend = ErrorMapLegend()
    count = lambda rgb: int((out == np.array(rgb, np.uint8)).all(axis=2).sum())
    assert count(legend.tp_color) == cm.tp
    assert count(legend.fn_color) == cm.fn
    assert count(legend.fp_color) == cm.fp
    ignored = int(np.count_nonzero(gt == IGNORE))
    assert count(legend.tn_color) == cm.tn + ignored


def test_legend_colors_must_differ():
    with pytest.raises(ValueError):
        ErrorMapLegend(tp_color=(0, 0, 255))  # collides with fn


# ------------------------------------------------------------------ report

@pytest.fixture
def class_rows():
    return {c: make_row(100 + int(c)) for c in LulcClass}


def test_report_lists_classes_and_average(class_rows):
    rep = report(class_rows)
    for name in ("Forest", "Builtup", "Farmland", "Water", "Average"):
        assert name in rep.text
    assert "Average" in rep.text.splitlines()[-3] or "Average" in rep.text
    assert rep.data["classes"]["forest"]["accuracy"] == class_rows[LulcClass.FOREST].accuracy
    avg = aggregate(class_rows)
    assert rep.data["average"]["f1"] == avg.f1


def test_report_with_reference_columns(class_rows):
    rep = report(class_rows, reference=REFERENCE_ECOGNITION)
    assert "(ref)" in rep.text
    assert rep.data["reference"]["water"]["accuracy"] == 0.73


def test_report_json_round_trips(class_rows):
    rep = report(class_rows)
    parsed = json.loads(rep.to_json())
    assert set(parsed["classes"]) == {"forest", "builtup", "farmland", "water"}
    assert "aggregation" in parsed


def test_report_values_rendered_to_three_decimals(class_rows):
    rep = report(class_rows)
    acc = class_rows[LulcClass.FOREST].accuracy
    assert f"{acc:.3f}" in rep.text
