import math

import pytest

from ghzsim import verify


EXPECTED_QUICK = ["heralded-states", "closed-form-rate",
                  "closed-form-fidelity", "inversion-roundtrip",
                  "scaling-exponents", "detector-multiplex", "loss-algebra",
                  "purification", "oracle-agreement"]


def test_quick_registry_passes():
    results = verify.run_checks()
    assert [r.name for r in results] == EXPECTED_QUICK
    for r in results:
        assert r.passed, r.summary()
        assert r.elapsed >= 0.0


def test_injected_fault_is_caught():
    results = verify.run_checks(fault_phase=0.2)
    failed = [r.name for r in results if not r.passed]
    assert failed == ["heralded-states"]
    bad = next(r for r in results if r.name == "heralded-states")
    assert bad.got > bad.tolerance


def test_summary_format():
    results = verify.run_checks()
    line = results[0].summary()
    assert line.startswith("[PASS] heralded-states:")
    assert "tol" in line


@pytest.mark.slow
def test_full_registry_passes():
    results = verify.run_checks(full=True)
    assert [r.name for r in results] == EXPECTED_QUICK + ["monte-carlo"]
    for r in results:
        assert r.passed, r.summary()
