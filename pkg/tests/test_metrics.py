import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scamtext.corpus import ClassLabel
from scamtext.metrics import (
    ConfusionMatrix,
    MetricsReport,
    average_precision,
    confusion,
    metrics_from_confusion,
    pr_curve,
)

S, H = ClassLabel.SCAM, ClassLabel.HAM


def test_confusion_examples():
    assert confusion([S, H, S], [S, H, S]) == ConfusionMatrix(tn=1, fp=0, fn=0, tp=2)
    assert confusion([S, H], [H, S]) == ConfusionMatrix(tn=0, fp=1, fn=1, tp=0)
    with pytest.raises(ValueError):
        confusion([S], [S, H])
    with pytest.raises(ValueError):
        confusion([], [])


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from([S, H]), st.sampled_from([S, H])), min_size=1, max_size=30),
       st.integers(0, 30))
def test_confusion_is_additive(pairs, cut):
    cut = min(cut, len(pairs) - 1) if len(pairs) > 1 else 0
    t, p = zip(*pairs)
    whole = confusion(list(t), list(p))
    assert whole.total == len(pairs)
    if 0 < cut < len(pairs):
        assert confusion(list(t[:cut]), list(p[:cut])) + confusion(list(t[cut:]), list(p[cut:])) == whole


def test_svm_row():
    r = metrics_from_confusion(ConfusionMatrix(tn=191, fp=22, fn=22, tp=288))
    assert round(100 * r.f1_scam, 2) == 92.90
    assert round(100 * r.f1_ham, 2) == 89.67
    assert round(100 * r.accuracy, 2) == 91.59


def test_transformer_row():
    r = metrics_from_confusion(ConfusionMatrix(tn=176, fp=37, fn=18, tp=292))
    assert 100 * r.recall_scam == pytest.approx(94.19, abs=0.005)
    assert 100 * r.precision_scam == pytest.approx(88.75, abs=0.005)
    assert 100 * r.f1_scam == pytest.approx(91.39, abs=0.005)
    assert 100 * r.f1_ham == pytest.approx(86.49, abs=0.005)


def test_zero_denominators_give_zero():
    r = metrics_from_confusion(ConfusionMatrix(tn=5))
    assert r.accuracy == 1.0 and r.precision_scam == 0.0 and r.recall_scam == 0.0 and r.f1_scam == 0.0
    with pytest.raises(ValueError):
        metrics_from_confusion(ConfusionMatrix())
    with pytest.raises(ValueError):
        ConfusionMatrix(tn=-1)


@settings(max_examples=200)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_report_invariants(tn, fp, fn, tp):
    if tn + fp + fn + tp == 0:
        return
    r = metrics_from_confusion(ConfusionMatrix(tn, fp, fn, tp))
    for name, v in r.to_dict().items():
        if v is not None:
            assert 0.0 <= v <= 1.0, name
    assert r.macro_f1 == pytest.approx((r.f1_scam + r.f1_ham) / 2)
    assert MetricsReport.from_dict(r.to_dict()) == r


def test_pr_curve_examples():
    c = pr_curve([0.9, 0.8, 0.1], [S, S, H])
    assert (1.0, 1.0) in c.points
    flat = pr_curve([0.5] * 4, [S, H, H, H])
    assert flat.points == [(1.0, 0.25)]
    rev = pr_curve([0.1, 0.2, 0.9], [S, S, H])
    assert rev.points[-1] == (1.0, pytest.approx(2 / 3))
    with pytest.raises(ValueError):
        pr_curve([0.1, 0.2], [H, H])


def test_hand_enumerated_ap():
    assert average_precision([0.9, 0.8, 0.7], [S, H, S]) == pytest.approx(5 / 6, abs=1e-15)
    assert average_precision(pr_curve([0.9, 0.8, 0.7], [S, H, S])) == pytest.approx(5 / 6)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from([S, H])), min_size=1, max_size=40))
def test_curve_invariants(items):
    scores, labels = zip(*items)
    if S not in labels:
        return
    c = pr_curve(scores, labels)
    assert np.all(np.diff(c.recall) >= 0)
    assert c.recall[-1] == 1.0
    ap = average_precision(scores, labels)
    assert 0.0 < ap <= 1.0 + 1e-12


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(-20, 20), st.sampled_from([S, H])), min_size=1, max_size=30))
def test_ap_is_invariant_to_monotone_maps(items):
    scores, labels = zip(*items)
    if S not in labels:
        return
    x = np.array(scores, dtype=float)
    base = average_precision(x, labels)
    for f in (lambda v: 3 * v + 7, np.exp, lambda v: np.arctan(v / 5), lambda v: v ** 3):
        assert average_precision(f(x), labels) == pytest.approx(base, abs=1e-12)


def test_perfect_rankings_have_unit_ap():
    for n_pos in range(1, 6):
        for n_neg in range(0, 6):
            scores = list(range(n_pos + n_neg, 0, -1))
            assert average_precision(scores, [S] * n_pos + [H] * n_neg) == 1.0


def exhaustive_ap(scores, is_pos):
    """Mean over positives of the precision at that positive's rank.

    Tied scores are ranked in every order and averaged over the tie group
    as a step: each positive counts the precision after its whole group.
    """
    n_pos = sum(is_pos)
    total = Fraction(0)
    for i, (s, p) in enumerate(zip(scores, is_pos)):
        if not p:
            continue
        admitted = [j for j, t in enumerate(scores) if t >= s]
        hits = sum(is_pos[j] for j in admitted)
        total += Fraction(hits, len(admitted))
    return total / n_pos


def test_ap_matches_exhaustive_oracle_small():
    for n in range(1, 9):
        scores = list(range(n, 0, -1))
        for bits in itertools.product([0, 1], repeat=n):
            if not any(bits):
                continue
            labels = [S if b else H for b in bits]
            assert average_precision(scores, labels) == pytest.approx(float(exhaustive_ap(scores, bits)), abs=1e-12)


def test_ap_oracle_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(1, 10))
        scores = rng.integers(0, 4, n).tolist()
        bits = rng.integers(0, 2, n).tolist()
        if not any(bits):
            continue
        labels = [S if b else H for b in bits]
        assert average_precision(scores, labels) == pytest.approx(float(exhaustive_ap(scores, bits)), abs=1e-12)
