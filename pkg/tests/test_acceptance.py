"""End-to-end acceptance criteria; each prints one PASS/FAIL line."""

import pytest

from holderlab.checks import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA])
def test_criterion(number, capsys):
    result = run_criterion(number, seed=0)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
