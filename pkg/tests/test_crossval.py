import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scamtext.corpus import ClassLabel, SynthConfig, synthesize
from scamtext.crossval import (
    CrossValidationError,
    CvSummary,
    render_report,
    run_cv,
    stratified_kfold,
)
from scamtext.metrics import ConfusionMatrix
from scamtext.pipeline import ConstantClassifier, TransformerClassifier, build_classifier

from conftest import make_corpus

S, H = ClassLabel.SCAM, ClassLabel.HAM


def test_five_and_five():
    f = stratified_kfold([S] * 5 + [H] * 5, k=5, seed=0)
    labels = np.array([1] * 5 + [0] * 5)
    for fold in range(5):
        idx = f.test_indices(fold)
        assert sorted(labels[idx].tolist()) == [0, 1]


def test_table_scale_folds():
    f = stratified_kfold([S] * 1550 + [H] * 1065, k=5, seed=123)
    for fold in range(5):
        idx = f.test_indices(fold)
        assert np.sum(idx < 1550) == 310 and np.sum(idx >= 1550) == 213


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10), st.integers(0, 200), st.integers(0, 200), st.integers(0, 2**32))
def test_stratification_property(k, n_s, n_h, seed):
    n_s, n_h = max(n_s, k), max(n_h, k)
    labels = [S] * n_s + [H] * n_h
    f = stratified_kfold(labels, k, seed)
    assert f.fold_of.min() == 0 and f.fold_of.max() == k - 1
    sizes = []
    for fold in range(k):
        idx = f.test_indices(fold)
        assert abs(np.sum(idx < n_s) - n_s / k) < 1
        assert abs(np.sum(idx >= n_s) - n_h / k) < 1
        sizes.append(len(idx))
        assert set(idx).isdisjoint(f.train_indices(fold))
        assert len(idx) + len(f.train_indices(fold)) == n_s + n_h
    assert max(sizes) - min(sizes) <= 1


def test_fold_assignment_is_deterministic():
    labels = [S, H] * 20
    a, b = stratified_kfold(labels, 4, 9), stratified_kfold(labels, 4, 9)
    assert np.array_equal(a.fold_of, b.fold_of)
    assert not np.array_equal(a.fold_of, stratified_kfold(labels, 4, 10).fold_of)


def test_kfold_errors():
    with pytest.raises(ValueError):
        stratified_kfold([S, H] * 5, k=1)
    with pytest.raises(ValueError, match="fewer than k"):
        stratified_kfold([S] * 10 + [H] * 2, k=5)


def test_constant_scam_on_sixty_forty():
    c = make_corpus([(f"scam message {i}", "scam") for i in range(60)]
                    + [(f"ham message {i}", "ham") for i in range(40)])
    s = run_cv(c, k=5, seed=0, roster=["constant-scam"])
    m = s.models["constant-scam"]
    assert m.confusion_sum == ConfusionMatrix(tn=0, fp=40, fn=0, tp=60)
    assert m.pooled.accuracy == 0.6 and m.pooled.recall_scam == 1.0
    assert m.mean["accuracy"] == pytest.approx(0.6) and m.std["accuracy"] == 0.0
    assert "60.00 ± 0.00" in render_report(s)


def test_roster_factories_and_errors(small_corpus):
    s = run_cv(small_corpus, k=3, seed=1, roster=[("always-scam", ConstantClassifier)])
    assert s.models["always-scam"].confusion_sum.total == len(small_corpus)
    with pytest.raises(ValueError):
        run_cv(small_corpus, k=3, roster=["svm", "svm"])

    class Broken(ConstantClassifier):
        def scores(self, texts):
            raise RuntimeError("boom")

    with pytest.raises(CrossValidationError, match="fold 0"):
        run_cv(small_corpus, k=3, roster=[("broken", Broken)])
    with pytest.raises(CrossValidationError, match="invalid corpus"):
        run_cv(make_corpus([("a", "scam")] * 10), k=2)


@pytest.fixture(scope="module")
def linear_summary(small_corpus):
    return run_cv(small_corpus, k=5, seed=3, roster=["logreg", "svm", "ensemble"])


def test_summary_properties(linear_summary, small_corpus):
    for name, m in linear_summary.models.items():
        assert m.confusion_sum.total == len(small_corpus)
        assert len(m.per_fold) == 5
        acc = [r.accuracy for r in m.per_fold]
        assert m.mean["accuracy"] == pytest.approx(np.mean(acc))
        assert m.std["accuracy"] == pytest.approx(np.std(acc, ddof=1))
        assert all(r.pr_auc is not None and 0 < r.pr_auc <= 1 for r in m.per_fold)


def test_json_round_trip(linear_summary):
    raw = linear_summary.to_json()
    back = CvSummary.from_json(raw)
    assert back.to_json() == raw
    obj = back.to_dict()["svm"]
    assert set(obj) == {"per_fold", "mean", "std", "confusion_sum"}
    assert set(obj["confusion_sum"]) == {"tn", "fp", "fn", "tp"}


def test_cv_is_reproducible(small_corpus, linear_summary):
    again = run_cv(small_corpus, k=5, seed=3, roster=["logreg", "svm", "ensemble"])
    assert again.to_json() == linear_summary.to_json()


def test_text_and_csv_rendering(linear_summary):
    text = render_report(linear_summary, "text")
    assert "Linear SVM" in text and "Logistic Regression" in text
    assert text.count("±") >= 9
    csv_lines = render_report(linear_summary, "csv").splitlines()
    assert csv_lines[0] == "model,fold,metric,value"
    assert len(csv_lines) == 1 + 3 * 5 * (9 + 4)
    with pytest.raises(ValueError):
        render_report(linear_summary, "xml")


def test_cell_format():
    c = make_corpus([("x y", "scam")] * 6 + [("y z", "ham")] * 4)
    s = run_cv(c, k=2, seed=0, roster=["constant-scam"])
    m = s.models["constant-scam"]
    m.mean["accuracy"], m.std["accuracy"] = 0.9159, 0.0219
    assert "91.59 ± 2.19" in render_report(s)


def test_transformer_in_roster():
    c = synthesize(SynthConfig(n_total=60, seed=4))
    s = run_cv(c, k=2, seed=0, roster=["transformer"],
               transformer_options={"epochs": 1, "d_model": 8, "n_heads": 2, "n_layers": 1, "d_ff": 16,
                                    "n_merges": 20, "max_len": 16})
    assert s.models["transformer"].confusion_sum.total == 60


def test_transformer_handles_tokenless_text():
    clf = TransformerClassifier(n_merges=5, max_len=8, epochs=1, d_model=8, n_heads=2, n_layers=1, d_ff=8)
    clf.fit(["win cash", "hello there", "!!!"], [S, H, S])
    p = clf.scores(["???", "win"])
    assert p.shape == (2,) and np.all((p > 0) & (p < 1))


def test_build_classifier_rejects_unknown_name():
    with pytest.raises(ValueError, match="unknown model"):
        build_classifier("forest")
