import math

import pytest

from nldiv.verify import CHECKS, CheckResult, run_suite


@pytest.fixture(scope="module")
def suite7():
    return run_suite(7)


def test_all_checks_pass(suite7):
    failed = [r for r in suite7 if not r.passed]
    assert not failed, failed


def test_case_counts(suite7):
    by_name = {r.name: r for r in suite7}
    assert by_name["G_k monotone nondecreasing"].cases == 100000
    assert by_name["gradient of J vs central differences"].cases == 10000
    assert by_name["recover_A(build_N(A)) = A"].cases == 200
    assert all(r.cases >= 6 for r in suite7)


def test_suite_reproducible(suite7):
    assert run_suite(7) == suite7


def test_other_seed_passes():
    assert all(r.passed for r in run_suite(11))


def test_check_result_nan_fails():
    assert not CheckResult("x", 1, math.nan, 1.0).passed
    assert CheckResult("x", 1, 0.5, 1.0).row()["passed"] is True


def test_checks_are_independent_functions():
    assert len(CHECKS) == len(set(CHECKS))
