import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from vesselseg.metrics import (CSV_COLUMNS, ConfusionCounts, confusion, dice, evaluate_set, mean_metrics,
                               metrics, overlay, write_metrics_csv)

triples = st.integers(1, 20).flatmap(
    lambda n: st.tuples(*[arrays(np.bool_, (n, n + 1)) for _ in range(3)]))


def test_perfect_and_empty_predictions():
    rng = np.random.default_rng(0)
    truth = rng.random((20, 20)) > 0.7
    fov = np.ones_like(truth)
    c = confusion(truth, truth, fov)
    assert c.fp == c.fn == 0 and metrics(c).accuracy == 1.0
    m = metrics(confusion(np.zeros_like(truth), truth, fov))
    assert m.sensitivity == 0.0 and m.specificity == 1.0


def test_metric_arithmetic():
    m = metrics(ConfusionCounts(tp=73, tn=95, fp=5, fn=27))
    assert m.sensitivity == pytest.approx(0.73)
    assert m.specificity == pytest.approx(0.95)
    assert m.accuracy == pytest.approx(0.84)
    assert metrics(ConfusionCounts(5, 5, 0, 0)) == type(m)(1.0, 1.0, 1.0)
    assert math.isnan(metrics(ConfusionCounts(0, 10, 0, 0)).sensitivity)
    assert dice(ConfusionCounts(4, 0, 2, 2)) == pytest.approx(2 / 3)


@given(triples)
def test_confusion_matches_loop(t):
    pred, truth, fov = t
    c = confusion(pred, truth, fov)
    assert (c.tp, c.tn, c.fp, c.fn) == oracles.confusion(pred, truth, fov)


@given(triples)
def test_swap_symmetry(t):
    pred, truth, fov = t
    a, b = confusion(pred, truth, fov), confusion(truth, pred, fov)
    assert (a.tp, a.tn, a.fp, a.fn) == (b.tp, b.tn, b.fn, b.fp)


@given(triples, st.integers(0, 2 ** 31))
def test_permutation_invariance(t, seed):
    pred, truth, fov = t
    perm = np.random.default_rng(seed).permutation(pred.size)
    f = lambda a: a.ravel()[perm].reshape(a.shape)
    assert confusion(pred, truth, fov) == confusion(f(pred), f(truth), f(fov))


def test_evaluate_set():
    truth = np.zeros((10, 10), bool)
    truth[:5] = True
    fov = np.ones_like(truth)
    tab = evaluate_set([(truth, truth, fov)])
    assert tab.mean.accuracy == 1.0
    wrong = truth.copy()
    wrong[5] = True                 # 10 of 100 pixels wrong -> Acc 0.9
    tab = evaluate_set([(wrong, truth, fov), (truth, truth, fov)], ids=["a", "b"])
    assert tab.rows[0][2].accuracy == pytest.approx(0.9)
    assert tab.mean.accuracy == pytest.approx(0.95)
    with pytest.raises(ValueError):
        evaluate_set([])


def test_mean_skips_nan():
    ms = [metrics(ConfusionCounts(0, 10, 0, 0)), metrics(ConfusionCounts(5, 5, 0, 5))]
    assert mean_metrics(ms).sensitivity == pytest.approx(0.5)


def test_metrics_csv(tmp_path):
    c = ConfusionCounts(1, 2, 3, 4)
    rows = [("x", c, metrics(c)), ("y", None, None)]
    write_metrics_csv(tmp_path / "m.csv", rows, metrics(c))
    got = list(csv.reader(open(tmp_path / "m.csv")))
    assert tuple(got[0]) == CSV_COLUMNS
    assert got[1][:5] == ["x", "1", "2", "3", "4"]
    assert got[2] == ["y"] + [""] * 7
    assert got[3][0] == "mean"


def test_overlay_colours():
    pred = np.array([[1, 1, 0, 0]], bool)
    truth = np.array([[1, 0, 1, 0]], bool)
    fov = np.ones_like(pred)
    o = overlay(pred, truth, fov, np.full((1, 4), 0.5))
    assert o[0, 0].tolist() == [0, 1, 0] and o[0, 1].tolist() == [1, 0, 0]
    assert o[0, 2].tolist() == [0, 0, 1] and o[0, 3].tolist() == [0.5] * 3
