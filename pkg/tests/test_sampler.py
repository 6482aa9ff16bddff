import numpy as np
import pytest
from scipy import stats

from mmrl.errors import DomainError, ResourceError
from mmrl.kernel_haar import HaarIndex
from mmrl.params import build_alpha
from mmrl.sampler import (IncrementSheet, Stream, coarsen, doob_statistic, epsilon_from_sheet, epsilon_level,
                          eta_from_sheet, haar_randomness, martingale_trace, project_sheets, read_sheet,
                          sample_increment_sheet, sample_sas, sample_sheets, sheet_laws, stream_key, write_sheet)


def ecf(x, xi):
    return float(np.mean(np.cos(xi * x)))


def test_gaussian_case_variance():
    x = sample_sas(2.0, 1.0, Stream(3), size=100_000)
    assert np.var(x) == pytest.approx(2.0, rel=0.05)
    assert ecf(x, 1.0) == pytest.approx(np.exp(-1.0), abs=5 / np.sqrt(x.size))


def test_cauchy_case_quartiles():
    x = sample_sas(1.0, 1.0, Stream(4), size=100_000)
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    assert abs(med) < 0.02
    assert q3 - q1 == pytest.approx(2.0, rel=0.05)


@pytest.mark.parametrize("alpha0", [0.7, 1.3, 1.5, 1.9])
def test_sas_characteristic_function(alpha0):
    x = sample_sas(alpha0, 0.8, Stream(5, 1), size=50_000)
    for xi in (0.5, 1.0, 2.0):
        assert ecf(x, xi) == pytest.approx(np.exp(-(0.8 * xi) ** alpha0), abs=5 / np.sqrt(x.size))


def test_sas_edge_cases():
    assert np.all(sample_sas(1.5, 0.0, Stream(1), size=10) == 0.0)
    assert sample_sas(1.5, 0.0, Stream(1)) == 0.0
    for bad in (0.0, 2.1, -1.0):
        with pytest.raises(DomainError):
            sample_sas(bad, 1.0, Stream(1))
    with pytest.raises(DomainError):
        sample_sas(1.5, -1.0, Stream(1))
    with pytest.raises(DomainError):
        stream_key(-1)


def test_stream_is_sequential():
    s = Stream(9)
    a = np.concatenate([s.uniform_pairs(5)[0], s.uniform_pairs(7)[0]])
    b = Stream(9).uniform_pairs(12)[0]
    assert np.array_equal(a, b)
    u1, u2 = Stream(9).uniform_pairs(100_000)
    assert 0 < u1.min() and u1.max() < 1 and 0 < u2.min() and u2.max() < 1
    assert stats.kstest(u1, "uniform").pvalue > 1e-3


def test_sheet_laws_and_guard(alpha_sine):
    a, scale = sheet_laws(alpha_sine, 3)
    np.testing.assert_allclose(a, alpha_sine(np.arange(8) / 8))
    np.testing.assert_allclose(scale, (1 / 8) ** (1 / a))
    with pytest.raises(ResourceError):
        sheet_laws(alpha_sine, 27)
    with pytest.raises(DomainError):
        sheet_laws(alpha_sine, 0)


def test_sheet_entry_laws(alpha_const):
    J, R = 10, 10_000
    x = sample_sheets(alpha_const, J, 21, range(R))
    for l in (0, 511, 1023):
        assert ecf(x[:, l], 1.0) == pytest.approx(np.exp(-2.0**-J), abs=4 / np.sqrt(R))
        assert ecf(x[:, l], 2.0**(J / 1.5)) == pytest.approx(np.exp(-1.0), abs=4 / np.sqrt(R))


def test_sheet_determinism_and_threads(alpha_sine):
    a = sample_sheets(alpha_sine, 8, 5, range(150), threads=1)
    b = sample_sheets(alpha_sine, 8, 5, range(150), threads=4)
    assert np.array_equal(a, b)
    c = sample_sheets(alpha_sine, 8, 5, [149, 3])
    assert np.array_equal(c, a[[149, 3]])
    s = sample_increment_sheet(alpha_sine, 8, 5, 3)
    assert np.array_equal(s.increments, a[3]) and s.J == 8
    with pytest.raises(ValueError):
        s.increments[0] = 1.0


def test_replicas_independent(alpha_const):
    x = sample_sheets(alpha_const, 4, 8, range(20_000))
    # rank correlation: distribution free, sd 1/sqrt(n) under independence
    r_rep = stats.spearmanr(x[:10_000, 0], x[10_000:, 0]).statistic
    r_ent = stats.spearmanr(x[:, 0], x[:, 1]).statistic
    assert abs(r_rep) < 3 / np.sqrt(10_000)
    assert abs(r_ent) < 3 / np.sqrt(20_000)
    assert abs(np.mean(np.sign(x))) < 3 / np.sqrt(x.size)


def test_projection_matches_sheets(alpha_sine, rng):
    w = rng.random((3, 256))
    p = project_sheets(alpha_sine, 8, 2, range(70), w, threads=2)
    s = sample_sheets(alpha_sine, 8, 2, range(70))
    np.testing.assert_allclose(p, s @ w.T, rtol=1e-12, atol=1e-12)
    with pytest.raises(DomainError):
        project_sheets(alpha_sine, 8, 2, range(3), np.ones((1, 100)))


def test_eta_and_epsilon_examples():
    zero = IncrementSheet.from_values(np.zeros(16))
    assert eta_from_sheet(zero) == 0.0
    assert eta_from_sheet(IncrementSheet.from_values([0.3, -1.1])) == pytest.approx(-0.8)
    sheet = IncrementSheet.from_values([1.0, 2.0, 3.0, 4.0])
    assert epsilon_from_sheet(sheet, HaarIndex(0, 0)) == (1 + 2) - (3 + 4)
    assert epsilon_from_sheet(sheet, HaarIndex(1, 0)) == -1.0
    assert epsilon_from_sheet(sheet, HaarIndex(1, 1)) == -1.0
    with pytest.raises(DomainError):
        epsilon_from_sheet(sheet, HaarIndex(2, 0))
    np.testing.assert_array_equal(haar_randomness(sheet.increments), [10.0, -4.0, -1.0, -1.0])
    np.testing.assert_array_equal(coarsen(sheet, 1), [3.0, 7.0])
    with pytest.raises(DomainError):
        coarsen(sheet, 3)


def test_eta_and_epsilon_laws(alpha_const):
    x = sample_sheets(alpha_const, 12, 17, range(10_000))
    eta = x.sum(axis=1)
    assert ecf(eta, 1.0) == pytest.approx(np.exp(-1.0), abs=0.05)
    eps = epsilon_level(x, 4)
    for k in (0, 9, 15):
        assert ecf(eps[:, k], 1.0) == pytest.approx(np.exp(-2.0**-4), abs=0.05)


def test_martingale_trace():
    sheet = IncrementSheet.from_values([1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0])
    tr = martingale_trace(sheet, 1)
    np.testing.assert_array_equal(tr.tau, [-4.0, -4.0])
    assert tr.max_abs == 4.0
    zero = IncrementSheet.from_values(np.zeros(8))
    for j in range(3):
        assert martingale_trace(zero, j).max_abs == 0.0


def test_last_partial_sum_moment_bounded(alpha_const):
    x = sample_sheets(alpha_const, 9, 23, range(10_000))
    m = [np.mean(np.abs(np.cumsum(epsilon_level(x, j), axis=1)[:, -1]) ** 1.2) for j in range(1, 9)]
    assert max(m) / min(m) < 1.5


def test_doob_statistic():
    assert np.all(doob_statistic(np.zeros((3, 32)), 1.0, 4) == 0.0)
    x = np.array([[1.0, 2.0, 3.0, 4.0]])
    # j=0: |eps_00| = 4; j=1: tau = (-1, -2) -> 2 / 2**zeta
    assert doob_statistic(x, 1.0, 1)[0] == 4.0
    assert doob_statistic(x, 0.0, 1)[0] == 4.0
    with pytest.raises(DomainError):
        doob_statistic(x, 1.0, 2)


def test_binary_round_trip(tmp_path, alpha_sine):
    s = sample_increment_sheet(alpha_sine, 9, 31, 2)
    path = tmp_path / "s.bin"
    write_sheet(path, s)
    back = read_sheet(path)
    assert back.level == 9 and back.seed == 31 and back.replica_index == 2
    assert np.array_equal(back.increments, s.increments)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTASHEET" * 10)
    with pytest.raises(DomainError):
        read_sheet(bad)
    short = tmp_path / "short.bin"
    short.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(DomainError):
        read_sheet(short)


def test_sheet_shape_check():
    with pytest.raises(DomainError):
        IncrementSheet(3, np.zeros(5))


@pytest.mark.parametrize("alpha0", [1.2, 1.5, 1.8])
def test_sas_against_reference_cdf(alpha0):
    # scipy's levy_stable (S1 parametrisation, beta=0) has the same CF exp(-|scale xi|**alpha)
    x = sample_sas(alpha0, 1.0, Stream(40, int(10 * alpha0)), size=2000)
    assert stats.kstest(x, stats.levy_stable(alpha0, 0.0).cdf).pvalue > 1e-3
