import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scamtext.corpus import (
    ClassLabel,
    CorpusError,
    SynthConfig,
    class_balance,
    dumps_corpus,
    load_corpus,
    save_corpus,
    synthesize,
    validate_corpus,
)
from scamtext.eda import detect_phone, detect_url

from conftest import make_corpus


def test_load_minimal_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text('text,label\n"hello",ham\n', encoding="utf-8")
    c = load_corpus(p)
    assert len(c) == 1
    assert c.messages[0].text == "hello"
    assert c.messages[0].label is ClassLabel.HAM
    assert c.provenance == "loaded"


def test_label_is_case_insensitive(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"text": "win now", "label": "SCAM"}\n', encoding="utf-8")
    assert load_corpus(p).messages[0].label is ClassLabel.SCAM


def test_unknown_label_names_line(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("text,label\nhi,spam\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(p)


def test_load_errors(tmp_path):
    with pytest.raises(CorpusError, match="not found"):
        load_corpus(tmp_path / "missing.jsonl")
    empty = tmp_path / "e.jsonl"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(CorpusError, match="empty"):
        load_corpus(empty)
    bad = tmp_path / "b.jsonl"
    bad.write_text('{"text": "a", "label": "ham"}\n{"text": "b"}\n', encoding="utf-8")
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(bad)
    garbled = tmp_path / "g.jsonl"
    garbled.write_text('{"text": "a", "label": "ham"}\n\n{oops\n', encoding="utf-8")
    with pytest.raises(CorpusError, match="line 3"):
        load_corpus(garbled)


def test_bom_tolerated_and_order_preserved(tmp_path):
    p = tmp_path / "c.csv"
    p.write_bytes("﻿text,label\nতিন,ham\n\"one, two\",scam\n".encode("utf-8"))
    c = load_corpus(p)
    assert c.texts == ["তিন", "one, two"]
    assert c.labels == [ClassLabel.HAM, ClassLabel.SCAM]


def test_written_files_have_no_bom(tmp_path):
    c = make_corpus([("টাকা", "ham"), ("x", "scam")])
    for name in ("c.csv", "c.jsonl"):
        save_corpus(c, tmp_path / name)
        assert not (tmp_path / name).read_bytes().startswith(b"\xef\xbb\xbf")


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(texts, st.sampled_from(["ham", "scam"])), min_size=1, max_size=8),
       st.sampled_from(["csv", "jsonl"]))
def test_round_trip(tmp_path_factory, pairs, fmt):
    if fmt == "csv":
        pairs = [(t.replace("\x00", "0"), l) for t, l in pairs]
    c = make_corpus(pairs)
    path = tmp_path_factory.mktemp("rt") / f"c.{fmt}"
    save_corpus(c, path)
    back = load_corpus(path)
    assert [(m.text, m.label) for m in back] == [(m.text, m.label) for m in c]


def test_nul_is_rejected_for_csv_only(tmp_path):
    c = make_corpus([("a\x00b", "ham")])
    with pytest.raises(CorpusError, match="NUL"):
        save_corpus(c, tmp_path / "c.csv")
    save_corpus(c, tmp_path / "c.jsonl")
    assert load_corpus(tmp_path / "c.jsonl").texts == ["a\x00b"]


def test_validate():
    assert "single class" in validate_corpus(make_corpus([("a", "scam"), ("b", "scam")])).violations
    rep = validate_corpus(make_corpus([("a", "scam"), ("  ", "ham"), ("c", "ham")]))
    assert rep.violations == ["empty text at index 1"]
    ok = validate_corpus(make_corpus([("a", "scam"), ("b", "ham"), ("c", "ham"), ("d", "scam")]))
    assert ok.ok and not ok.warnings
    dup = validate_corpus(make_corpus([("a", "scam"), ("a", "scam"), ("b", "ham")]))
    assert dup.ok and dup.warnings


def test_class_balance():
    c = make_corpus([("h", "ham")] * 4 + [("s", "scam")] * 6, provenance="")
    assert class_balance(c) == (4, 6)
    assert sorted(class_balance(make_corpus([("x", "scam")]))) == [0, 1]


def test_default_scale_balance(default_corpus):
    assert class_balance(default_corpus) == (1065, 1550)
    assert default_corpus.provenance == "synthetic"


def test_synthesize_is_deterministic():
    cfg = SynthConfig(n_total=10, scam_fraction=0.5, seed=1)
    assert dumps_corpus(synthesize(cfg)) == dumps_corpus(synthesize(cfg))
    assert dumps_corpus(synthesize(cfg)) != dumps_corpus(synthesize(SynthConfig(n_total=10, scam_fraction=0.5, seed=2)))


@settings(max_examples=25, deadline=None)
@given(st.integers(10, 120), st.floats(0.05, 0.95), st.integers(0, 2**64 - 1))
def test_synthesize_exact_counts(n, frac, seed):
    c = synthesize(SynthConfig(n_total=n, scam_fraction=frac, seed=seed))
    assert len(c) == n
    assert class_balance(c)[1] == round(n * frac)
    assert all(len(m.text) >= 10 and m.text.strip() for m in c)


def test_phone_rate_near_configured(default_corpus):
    scam = [m.text for m in default_corpus if m.label is ClassLabel.SCAM]
    rate = sum(map(detect_phone, scam)) / len(scam)
    assert abs(rate - 0.97) <= 0.03


def test_incidence_within_binomial_ci():
    # 99% normal-approximation interval, n = 1500 scam messages
    cfg = SynthConfig(n_total=3000, scam_fraction=0.5, seed=11)
    scam = [m.text for m in synthesize(cfg) if m.label is ClassLabel.SCAM]
    n = len(scam)
    for rate, detector in ((cfg.scam_phone_rate, detect_phone), (cfg.scam_url_rate, detect_url)):
        half = 2.576 * (rate * (1 - rate) / n) ** 0.5
        assert abs(sum(map(detector, scam)) / n - rate) <= half


def test_zero_url_rate_means_no_scam_urls():
    c = synthesize(SynthConfig(n_total=400, scam_url_rate=0.0, seed=5))
    assert not any(detect_url(m.text) for m in c if m.label is ClassLabel.SCAM)


def test_full_phone_rate_is_always_detected():
    c = synthesize(SynthConfig(n_total=400, scam_phone_rate=1.0, seed=5))
    assert all(detect_phone(m.text) for m in c if m.label is ClassLabel.SCAM)


@pytest.mark.parametrize("bad", [
    dict(n_total=9), dict(scam_fraction=0.0), dict(scam_fraction=1.0), dict(scam_phone_rate=1.2),
    dict(bangla_fraction=0.8, codemix_fraction=0.3), dict(seed=-1),
])
def test_invalid_config(bad):
    with pytest.raises(CorpusError):
        synthesize(SynthConfig(**bad))


def test_taka_only_in_ham_wording():
    c = synthesize(SynthConfig(n_total=600, overlap_fraction=0.0, seed=2))
    for m in c:
        if "taka" in m.text.lower():
            assert m.label is ClassLabel.HAM


def test_jsonl_lines_are_objects(small_corpus):
    lines = dumps_corpus(small_corpus).splitlines()
    assert len(lines) == 200
    assert set(json.loads(lines[0])) == {"text", "label"}
