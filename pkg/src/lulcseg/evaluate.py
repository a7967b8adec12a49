"""Pixel-level scoring: confusion matrices, the five segmentation metrics,
per-class aggregation, error maps, and a two-format report.

Aggregation policy, stated once and repeated in every report footer: each
image contributes one pooled confusion matrix; a class row is the unweighted
mean of its images' metric rows; the Average row is the unweighted mean of
the four class rows.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyComparison, MissingClass
from .labels import IGNORE, TARGET, LulcClass, ensure_same_dims

METRIC_NAMES = ("accuracy", "iou", "recall", "precision", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionMatrix:
    """Count tp/fp/fn/tn over pixels whose ground truth is not IGNORE."""
    ensure_same_dims(pred, gt)
    valid = gt != IGNORE
    p = pred == TARGET
    t = gt == TARGET
    return ConfusionMatrix(
        tp=int(np.count_nonzero(valid & p & t)),
        fp=int(np.count_nonzero(valid & p & ~t)),
        fn=int(np.count_nonzero(valid & ~p & t)),
        tn=int(np.count_nonzero(valid & ~p & ~t)),
    )


@dataclass(frozen=True)
class MetricsRow:
    accuracy: float
    iou: float
    recall: float
    precision: float
    f1: float
    # secondary score: mean of target-class and other-class IoU
    mean_iou: float | None = None
    # names of metrics whose denominator was zero (value defined as 0)
    flags: tuple = ()

    def values(self) -> tuple:
        return (self.accuracy, self.iou, self.recall, self.precision, self.f1)


def _ratio(num: int, den: int, name: str, flags: list) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics_from_confusion(cm: ConfusionMatrix) -> MetricsRow:
    """accuracy, IoU, recall, precision, F-1 from one pooled matrix.

    Zero-denominator cases are defined as 0 and recorded in flags so
    aggregation never propagates NaN.
    """
    if cm.total == 0:
        raise EmptyComparison("confusion matrix counted no pixels")
    flags = []
    accuracy = (cm.tp + cm.tn) / cm.total
    iou = _ratio(cm.tp, cm.tp + cm.fp + cm.fn, "iou", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", flags)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    if precision + recall == 0:
        flags.append("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    other_iou = _ratio(cm.tn, cm.tn + cm.fn + cm.fp, "other_iou", flags)
    return MetricsRow(accuracy, iou, recall, precision, f1,
                      mean_iou=(iou + other_iou) / 2, flags=tuple(flags))


def mean_rows(rows) -> MetricsRow:
    """Unweighted per-metric mean; flags are merged."""
    rows = list(rows)
    if not rows:
        raise EmptyComparison("no rows to average")
    cols = np.array([r.values() for r in rows], dtype=np.float64)
    mean = cols.mean(axis=0)
    if all(r.mean_iou is not None for r in rows):
        mean_iou = float(np.mean([r.mean_iou for r in rows]))
    else:
        mean_iou = None
    flags = tuple(sorted({f for r in rows for f in r.flags}))
    return MetricsRow(*map(float, mean), mean_iou=mean_iou, flags=flags)


def aggregate(rows: dict) -> MetricsRow:
    """Average row over the four classes (unweighted, order-invariant)."""
    missing = [c.name.lower() for c in LulcClass if c not in rows]
    if missing:
        raise MissingClass(f"missing class rows: {', '.join(missing)}")
    return mean_rows(rows[c] for c in LulcClass)


@dataclass(frozen=True)
class ErrorMapLegend:
    tp_color: tuple = (0, 255, 255)   # cyan: target found
    fn_color: tuple = (0, 0, 255)     # blue: target missed
    fp_color: tuple = (255, 0, 0)     # red: target hallucinated
    tn_color: tuple = (128, 128, 128)  # gray, also the ignore background

    def __post_init__(self):
        colors = {self.tp_color, self.fn_color, self.fp_color, self.tn_color}
        if len(colors) != 4:
            raise ValueError("legend colors must be distinct")


def error_map(pred: np.ndarray, gt: np.ndarray,
              legend: ErrorMapLegend | None = None) -> np.ndarray:
    """Per-pixel outcome rendering; ground-truth IGNORE pixels stay gray."""
    legend = legend or ErrorMapLegend()
    ensure_same_dims(pred, gt)
    valid = gt != IGNORE
    p = pred == TARGET
    t = gt == TARGET
    out = np.empty(pred.shape + (3,), dtype=np.uint8)
    out[:] = np.array(legend.tn_color, dtype=np.uint8)
    out[valid & p & t] = legend.tp_color
    out[valid & ~p & t] = legend.fn_color
    out[valid & p & ~t] = legend.fp_color
    return out


# Published baseline: the rule-based eCognition workflow scored on the same
# benchmark (accuracy, IoU, recall, precision, F-1 per class).
REFERENCE_ECOGNITION = {
    LulcClass.FOREST: MetricsRow(0.80, 0.77, 0.63, 0.72, 0.65),
    LulcClass.BUILTUP: MetricsRow(0.73, 0.58, 0.30, 0.19, 0.21),
    LulcClass.FARMLAND: MetricsRow(0.63, 0.47, 0.23, 0.32, 0.32),
    LulcClass.WATER: MetricsRow(0.73, 0.59, 0.69, 0.40, 0.48),
}

_DISPLAY_ORDER = (LulcClass.FOREST, LulcClass.BUILTUP,
                  LulcClass.FARMLAND, LulcClass.WATER)
_FOOTER = ("class row = unweighted mean over that class's test images; "
           "Average = unweighted mean over the four class rows")


@dataclass
class Report:
    text: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def _row_dict(row: MetricsRow) -> dict:
    d = {name: getattr(row, name) for name in METRIC_NAMES}
    d["mean_iou"] = row.mean_iou
    d["flags"] = list(row.flags)
    return d


def report(rows: dict, reference: dict | None = None,
           title: str = "Per-class segmentation performance") -> Report:
    """Text table plus machine-readable dict; Average row appended.

    `reference` adds a second value column per metric (for example
    REFERENCE_ECOGNITION). The JSON carries unrounded values; the table
    renders three decimals.
    """
    avg = aggregate(rows)
    named = [(c.name.capitalize(), rows[c],
              reference.get(c) if reference else None)
             for c in _DISPLAY_ORDER]
    ref_avg = mean_rows(reference.values()) if reference else None
    named.append(("Average", avg, ref_avg))

    headers = ["Class"]
    for metric in ("Accuracy", "IoU", "Recall", "Precision", "F-1"):
        headers.append(metric)
        if reference:
            headers.append(f"{metric} (ref)")
    headers.append("MeanIoU")

    lines = [title, ""]
    table = [headers]
    for label, row, ref in named:
        cells = [label]
        for i in range(5):
            cells.append(f"{row.values()[i]:.3f}")
            if reference:
                cells.append(f"{ref.values()[i]:.3f}" if ref else "-")
        cells.append(f"{row.mean_iou:.3f}" if row.mean_iou is not None else "-")
        table.append(cells)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    for r in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    lines += ["", f"Aggregation: {_FOOTER}"]
    flagged = sorted({f for r in rows.values() for f in r.flags})
    if flagged:
        lines.append(f"Zero-denominator metrics reported as 0: {', '.join(flagged)}")

    data = {
        "classes": {c.name.lower(): _row_dict(rows[c]) for c in LulcClass},
        "average": _row_dict(avg),
        "reference": ({c.name.lower(): _row_dict(reference[c]) for c in reference}
                      if reference else None),
        "aggregation": _FOOTER,
    }
    return Report("\n".join(lines), data)
