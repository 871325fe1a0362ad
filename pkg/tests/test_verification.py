import pytest

from heatlab.verification import SUITE_SECTIONS, run_verify_suite


def test_full_suite_passes():
    res = run_verify_suite()
    assert res["pass"]
    assert res["n_failed"] == 0
    assert res["n_checks"] > 60


def test_record_schema():
    res = run_verify_suite(only="ordering")
    for rec in res["checks"]:
        assert {"check", "params", "lhs", "rhs", "ratio", "pass"} \
            == set(rec)


def test_sections_are_filterable():
    res = run_verify_suite(only="decay_constant")
    assert {rec["check"] for rec in res["checks"]} == {"decay_constant"}


def test_unknown_section_rejected():
    with pytest.raises(ValueError):
        run_verify_suite(only="nope")


def test_fault_injection_breaks_smoothing():
    res = run_verify_suite(only="smoothing", fault="smoothing")
    assert not res["pass"]
    assert "smoothing" in res["failed_names"]
