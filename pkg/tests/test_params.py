import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmrl.errors import ConfigError, DomainError
from mmrl.params import build_alpha, build_hurst, check_hurst_range, eval_alpha, eval_hurst, parse_knots


def test_constant_family(alpha_const):
    assert alpha_const(0.7) == 1.5
    assert alpha_const.alpha_min == alpha_const.alpha_max == 1.5
    assert alpha_const.is_constant
    assert alpha_const.holder_exponent == 0.999


def test_sine_family_range_and_values(alpha_sine):
    assert alpha_sine.alpha_min == pytest.approx(1.2, abs=1e-15)
    assert alpha_sine.alpha_max == pytest.approx(1.8, abs=1e-15)
    assert eval_alpha(alpha_sine, 0.25) == pytest.approx(1.8, abs=1e-15)
    assert eval_alpha(alpha_sine, 0.75) == pytest.approx(1.2, abs=1e-15)
    # grid minimisation agrees with the analytic range
    g = alpha_sine(np.linspace(0, 1, 10001))
    assert g.min() == pytest.approx(1.2, abs=1e-9) and g.max() == pytest.approx(1.8, abs=1e-9)


def test_boundary_extension(alpha_sine):
    assert eval_alpha(alpha_sine, -3.0) == pytest.approx(1.5)
    assert eval_alpha(alpha_sine, 7.0) == pytest.approx(alpha_sine(1.0))


def test_affine_and_alias():
    a = build_alpha({"family": "affine", "p1": 1.1, "p2": 0.5, "min": 1.1, "max": 1.6})
    assert a(1.0) == pytest.approx(1.6)
    s = build_alpha({"family": "sine-mapped", "p1": 1.5, "p2": 0.3})
    assert s(0.25) == pytest.approx(1.8)


def test_closed_form_reproduced(rng, alpha_sine):
    s = rng.random(100)
    np.testing.assert_allclose(alpha_sine(s), 1.5 + 0.3 * np.sin(2 * np.pi * s), atol=1e-12, rtol=0)


@pytest.mark.parametrize("desc", [
    {"family": "constant", "p1": 2.0},
    {"family": "constant", "p1": 1.0},
    {"family": "sine", "p1": 1.5, "p2": 0.6},
    {"family": "affine", "p1": 1.5, "p2": 0.1, "min": 1.0, "max": 1.7},
    {"family": "affine", "p1": 1.2, "p2": 0.5, "min": 1.3, "max": 1.7},
    {"family": "piecewise-cubic", "knots": "0:1.3, 0.5:1.5, 1:1.4"},
    {"family": "piecewise-cubic", "knots": "0:1.3, 0.6:1.5, 0.4:1.4, 1:1.4"},
    {"family": "piecewise-cubic", "knots": "0.1:1.3, 0.4:1.5, 0.6:1.4, 1:1.4"},
    {"family": "bogus", "p1": 1.5},
    {"family": "constant"},
    {"family": "constant", "p1": 1.5, "holder": 1.0},
])
def test_rejected_descriptors(desc):
    with pytest.raises(ConfigError):
        build_alpha(desc)


def test_piecewise_cubic_range_and_derivative(rng):
    a = build_alpha({"family": "piecewise-cubic", "knots": "0:1.3, 0.3:1.7, 0.7:1.25, 1:1.5"})
    g = a(np.linspace(0, 1, 10001))
    assert a.alpha_min <= g.min() + 1e-12 and g.max() <= a.alpha_max + 1e-12
    assert g.min() == pytest.approx(a.alpha_min, abs=1e-7)
    s = rng.uniform(0.01, 0.99, 100)
    h = 1e-6
    fd = (a(s + h) - a(s - h)) / (2 * h)
    np.testing.assert_allclose(fd, a.derivative(s), atol=1e-6)


def test_derivative_matches_finite_difference(rng, alpha_sine):
    s = rng.uniform(0.01, 0.99, 100)
    h = 1e-6
    fd = (alpha_sine(s + h) - alpha_sine(s - h)) / (2 * h)
    np.testing.assert_allclose(fd, alpha_sine.derivative(s), atol=1e-6)


def test_derivative_holder_constant_finite(rng, alpha_sine):
    s1, s2 = rng.random(10_000), rng.random(10_000)
    keep = s1 != s2
    ratio = np.abs(alpha_sine.derivative(s1[keep]) - alpha_sine.derivative(s2[keep])) / (
        np.abs(s1[keep] - s2[keep]) ** alpha_sine.holder_exponent)
    assert np.isfinite(ratio.max()) and ratio.max() < 1e3


def test_hurst_examples(alpha_const):
    h = build_hurst({"family": "constant", "p1": 0.72}, alpha_const)
    assert eval_hurst(h, 0.5) == 0.72
    aff = build_hurst({"family": "affine", "p1": 0.7, "p2": 0.2}, alpha_const)
    assert eval_hurst(aff, 1.0) == pytest.approx(0.9)
    with pytest.raises(DomainError):
        eval_hurst(aff, -0.1)


def test_hurst_range_constraint(alpha_const):
    with pytest.raises(ConfigError, match=r"H range must lie in \(1/alpha_min, 1\)"):
        build_hurst({"family": "constant", "p1": 0.6}, alpha_const)
    h = build_hurst({"family": "constant", "p1": 0.6})
    with pytest.raises(ConfigError):
        check_hurst_range(h, alpha_const)
    with pytest.raises(ConfigError):
        build_hurst({"family": "constant", "p1": 1.0})


def test_parse_knots_forms():
    assert parse_knots("0:1.3, 0.5:1.6") == [(0.0, 1.3), (0.5, 1.6)]
    assert parse_knots([(0, 1), (1, 2)]) == [(0.0, 1.0), (1.0, 2.0)]
    with pytest.raises(ConfigError):
        parse_knots("0-1.3")


def test_describe_is_canonical():
    a = build_alpha({"family": "sine", "p1": "1.50", "p2": 0.3})
    b = build_alpha({"family": "sine", "p1": 1.5, "p2": "0.3", "p3": 1})
    assert a.describe() == b.describe()


@settings(max_examples=60, deadline=None)
@given(mean=st.floats(1.05, 1.95), amp=st.floats(-0.5, 0.5), freq=st.floats(0.1, 3.0),
       phase=st.floats(-3.0, 3.0))
def test_sine_range_matches_grid(mean, amp, freq, phase):
    desc = {"family": "sine", "p1": mean, "p2": amp, "p3": freq, "p4": phase}
    g = mean + amp * np.sin(2 * np.pi * freq * np.linspace(0, 1, 20001) + phase)
    if g.min() <= 1.0 + 1e-9 or g.max() >= 2.0 - 1e-9:
        return
    a = build_alpha(desc)
    assert a.alpha_min <= g.min() + 1e-12 and g.max() <= a.alpha_max + 1e-12
    assert a.alpha_min == pytest.approx(g.min(), abs=1e-6)
    assert a.alpha_max == pytest.approx(g.max(), abs=1e-6)
    assert 1.0 < a.alpha_min and a.alpha_max < 2.0
