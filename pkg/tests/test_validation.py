import numpy as np
import pytest
from scipy import stats

from mmrl.errors import DomainError, ProtocolError
from mmrl.integrand import Integrand, characteristic_function, indicator, step_function
from mmrl.params import build_hurst
from mmrl.simulator import ConvergenceReport, FieldGrid, convergence_study
from mmrl.validation import (CheckResult, ValidationReport, check_ecf, check_ecf_suite, check_ks,
                             check_martingale_bound, check_moment, check_rate, check_tail, ecf_deviation,
                             integral_samples, reduction_samples, tail_profile, tail_slope)

ZERO = step_function([0.0, 1.0], [0.0])


def test_cf_at_zero_and_zero_integrand(alpha_sine):
    f = indicator(0.2, 0.7)
    assert characteristic_function(f, alpha_sine, 0.0) == 1.0
    assert np.all(characteristic_function(ZERO, alpha_sine, [0.5, 1.0, 2.0]) == 1.0)
    x = integral_samples([ZERO], alpha_sine, 100, 6, 1)
    assert np.all(x == 0.0)


def test_ecf_deviation_exact():
    re, im = ecf_deviation(np.array([0.0, 0.0]), [1.0, 2.0], np.array([1.0, 1.0]))
    assert re == 0.0 and im == 0.0
    re, im = ecf_deviation(np.array([np.pi, -np.pi]), [1.0], np.array([1.0]))
    assert re == pytest.approx(2.0) and im == pytest.approx(0.0, abs=1e-15)


def test_ecf_checks(alpha_sine):
    fs = [indicator(0, 1), indicator(0.25, 0.5, 2.0)]
    suite = check_ecf_suite(fs, alpha_sine, [0.5, 1.0, 2.0], 10_000, 12, 3)
    single = check_ecf(fs[1], alpha_sine, [0.5, 1.0, 2.0], 10_000, 12, 3)
    assert all(r.passed for r in suite)
    assert single.passed and single.threshold == pytest.approx(0.05)
    with pytest.raises(DomainError):
        check_ecf(fs[0], alpha_sine, [1.0], 5_000, 12, 3)
    with pytest.raises(DomainError):
        check_ecf(fs[0], alpha_sine, [1.0], 10_000, 10, 3)


def test_tail_profile_and_slope():
    x = np.array([-3.0, -1.0, 0.5, 2.0, 4.0])
    np.testing.assert_array_equal(tail_profile(x, [1.0, 2.0, 5.0]), [4, 3, 0])
    lam = np.array([1.0, 2.0, 4.0, 8.0])
    assert tail_slope(lam, 1000 * lam**-1.5) == pytest.approx(-1.5)


def test_tail_checks(alpha_const, alpha_sine):
    assert check_tail(ZERO, alpha_sine, [1, 10], 1000, 6, 0).passed
    f = indicator(0, 1)
    skipped = check_tail(f, alpha_const, [1e6, 1e7], 1000, 6, 0)
    assert skipped.skipped and skipped.passed and "skipped" in skipped.line()
    ok = check_tail(f, alpha_const, np.geomspace(1, 1e4, 13), 200_000, 8, 0)
    assert ok.passed, ok.line()
    assert "skipped_thresholds" in ok.detail
    var = check_tail(f, alpha_sine, np.geomspace(1, 30, 8), 50_000, 8, 0)
    assert var.passed, var.line()


def test_moment_checks(alpha_sine):
    f = step_function([0, 0.3, 1.0], [2.0, -0.5])
    res = check_moment(f, alpha_sine, 0.8, 100_000, 8, 5)
    assert res.passed, res.line()
    for gamma in (0.0, 1.2, 1.5):
        with pytest.raises(DomainError):
            check_moment(f, alpha_sine, gamma, 100_000, 8, 5)
    with pytest.raises(DomainError):
        check_moment(f, alpha_sine, 0.5, 1000, 8, 5)


def test_martingale_bound(alpha_const):
    res = check_martingale_bound(alpha_const, 1.0, 5, replicas=(1000, 5000), seed=2)
    assert res.passed and 0.5 <= res.statistic <= 2.0
    with pytest.raises(DomainError):
        check_martingale_bound(alpha_const, 0.6, 5)


def test_rate_needs_coupled_report(alpha_const):
    grid = FieldGrid.make(np.linspace(0, 1, 6), [0.9])
    rep = convergence_study(alpha_const, grid, 0.9, [2, 4, 6], 8, 8, 1)
    res = check_rate(rep, 0.9, alpha_const.holder_exponent, 1.5)
    assert res.check_id == "rate" and np.isfinite(res.statistic)
    rep.coupled = False
    with pytest.raises(ProtocolError):
        check_rate(rep, 0.9, alpha_const.holder_exponent, 1.5)


def test_ks_reduction(alpha_const, alpha_sine, hurst_09):
    y, direct, scale = reduction_samples(1.5, alpha_const, hurst_09, 0.7, 500, 8, 3)
    assert y.shape == direct.shape == (500,) and scale > 0
    # same samples feed both checks: KS and empirical CF agree on the verdict
    assert stats.ks_2samp(y, direct).pvalue >= 0.01
    assert check_ks(alpha_const, hurst_09, 0.7, 500, 8, 3).passed
    xi = np.linspace(-5, 5, 21)
    for x in (y, direct):
        re, im = ecf_deviation(x, xi, np.exp(-np.abs(scale * xi) ** 1.5))
        assert max(re, im) <= 5 / np.sqrt(500)
    with pytest.raises(DomainError):
        check_ks(alpha_sine, build_hurst({"family": "constant", "p1": 0.9}), 0.5, 100, 6, 0)


def test_report_formatting():
    rep = ValidationReport()
    rep.add(CheckResult("a", 0.1, 0.2, True, 10, (0,)))
    rep.add(CheckResult("b", 3.0, 0.2, False, 10, (0, 1), "why"))
    assert not rep.passed and rep.failing() == ["b"]
    text = rep.to_text()
    assert "a statistic=0.1 threshold=0.2 PASS seed=0 N=10" in text
    assert "b statistic=3 threshold=0.2 FAIL seed=0,1 N=10 (why)" in text
    assert text.endswith("overall FAIL (2 checks)\n")
    assert rep.to_csv().splitlines()[0] == "check_id,statistic,threshold,passed,skipped,n,seeds,detail"
