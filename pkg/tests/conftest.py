import pytest

from scamtext.corpus import ClassLabel, LabeledCorpus, Message, SynthConfig, synthesize

SCAM, HAM = ClassLabel.SCAM, ClassLabel.HAM


def make_corpus(pairs, provenance="loaded"):
    return LabeledCorpus(tuple(Message(t, ClassLabel(l)) for t, l in pairs), provenance)


@pytest.fixture(scope="session")
def default_corpus():
    """Default-config synthetic corpus at full scale (2615 messages)."""
    return synthesize(SynthConfig(seed=7))


@pytest.fixture(scope="session")
def small_corpus():
    return synthesize(SynthConfig(n_total=200, seed=3))


# Acceptance criteria register their outcome here; printed at the end of the run.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
