"""Acceptance criteria at their stated tolerances; prints one PASS/FAIL line each."""

import pytest

from kolab.acceptance import CRITERIA, run_one


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_one(number, seed=0, jobs=1)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
