from __future__ import annotations

import pytest

import varform
from varform.dsl import parse_theory
from varform.jetcore import JetSpace


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])


@pytest.fixture
def mech():
    """One coordinate ``t``, one field ``u``."""
    return JetSpace(["t"], ["u"])


@pytest.fixture
def plane():
    """Coordinates ``t, x``, one field ``u``."""
    return JetSpace(["t", "x"], ["u"])


@pytest.fixture
def corpus():
    def load(name):
        return parse_theory(varform.corpus_path(name).read_text())

    return load
