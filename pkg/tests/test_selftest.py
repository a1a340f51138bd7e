import pytest

from wordrank.selftest import run_selftest


def test_small_run_is_deterministic():
    a = run_selftest(seed=11, chains=10)
    b = run_selftest(seed=11, chains=10)
    assert a.ok
    assert a.to_dict() == b.to_dict()
    assert a.passed["decision_tree"] == 10


def test_injected_fault_is_reported():
    report = run_selftest(seed=11, chains=4, fault="order")
    assert not report.ok
    failure = report.failures[0]
    assert failure["property"] == "oracle_equivalence"
    assert failure["detail"]["rank"] == 1
    assert "matrix" in failure["chain"]


def test_unknown_fault():
    with pytest.raises(ValueError):
        run_selftest(fault="nope")
