"""Pixel-wise evaluation of vessel masks inside the field of view."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgcore import as_mask, save_png

CSV_COLUMNS = ("image_id", "tp", "tn", "fp", "fn", "sn", "sp", "acc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    sensitivity: float
    specificity: float
    accuracy: float


def _ratio(num, den):
    return num / den if den > 0 else math.nan


def confusion(pred, truth, fov):
    """Confusion counts over in-FOV pixels, vessel as the positive class."""
    pred = as_mask(pred)
    truth = as_mask(truth, pred.shape)
    fov = as_mask(fov, pred.shape)
    p, t = pred[fov], truth[fov]
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(p.size - tp - fp - fn)
    return ConfusionCounts(tp, tn, fp, fn)


def metrics(c):
    """SN, SP and Acc; an empty denominator gives NaN rather than an error."""
    return Metrics(
        sensitivity=_ratio(c.tp, c.tp + c.fn),
        specificity=_ratio(c.tn, c.tn + c.fp),
        accuracy=_ratio(c.tp + c.tn, c.total),
    )


def dice(c):
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)


def mean_metrics(items):
    """Unweighted per-image mean; NaN entries are left out of each average."""
    def avg(vals):
        vals = [v for v in vals if not math.isnan(v)]
        return sum(vals) / len(vals) if vals else math.nan
    items = list(items)
    return Metrics(avg(m.sensitivity for m in items),
                   avg(m.specificity for m in items),
                   avg(m.accuracy for m in items))


@dataclass
class EvaluationTable:
    rows: list          # (image_id, ConfusionCounts, Metrics)
    mean: Metrics


def evaluate_set(pairs, ids=None):
    """Per-image metrics plus their unweighted mean for (pred, truth, fov) triples."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluate_set needs at least one image")
    if ids is None:
        ids = [str(i) for i in range(len(pairs))]
    rows = []
    for image_id, (pred, truth, fov) in zip(ids, pairs):
        c = confusion(pred, truth, fov)
        rows.append((image_id, c, metrics(c)))
    return EvaluationTable(rows, mean_metrics(r[2] for r in rows))


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def write_metrics_csv(path, rows, mean=None):
    """Write the per-image table; ``rows`` items are (id, counts or None, metrics or None)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for image_id, c, m in rows:
            if c is None:
                writer.writerow([image_id, "", "", "", "", "", "", ""])
            else:
                writer.writerow([image_id, c.tp, c.tn, c.fp, c.fn,
                                 _fmt(m.sensitivity), _fmt(m.specificity), _fmt(m.accuracy)])
        if mean is not None:
            writer.writerow(["mean", "", "", "", "",
                             _fmt(mean.sensitivity), _fmt(mean.specificity), _fmt(mean.accuracy)])


def overlay(pred, truth, fov, gray):
    """RGB overlay: TP green, FP red, FN blue, TN shows the grey image."""
    pred, truth, fov = as_mask(pred), as_mask(truth), as_mask(fov)
    g = np.clip(np.asarray(gray, dtype=np.float64), 0.0, 1.0)
    out = np.repeat(g[..., None], 3, axis=2)
    out[~fov] = 0.0
    for sel, colour in (((pred & truth), (0, 1, 0)), ((pred & ~truth), (1, 0, 0)),
                        ((~pred & truth), (0, 0, 1))):
        out[sel & fov] = colour
    return out


def save_overlay(path, pred, truth, fov, gray):
    save_png(path, overlay(pred, truth, fov, gray))
