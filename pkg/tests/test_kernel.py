import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shetorus.exceptions import InvalidParameterError, PreconditionError
from shetorus.kernel import (
    FOURIER_SWITCH,
    convolve_initial,
    fourier_cutoff,
    heat_kernel,
    heat_multipliers,
    image_cutoff,
    kernel_increment_check,
    kernel_l2_identity,
    kernel_mass,
    l2_mass_bound,
    real_line_domination_factor,
    real_line_kernel,
)

times = st.floats(1e-4, 10.0)
points = st.floats(-3.0, 3.0, allow_nan=False)


def brute_kernel(t, x, K=60):
    # direct image sum, independent of the cutoff logic
    k = np.arange(-K, K + 1)
    return float(np.sum(np.exp(-(x - k) ** 2 / (2 * t))) / math.sqrt(2 * math.pi * t))


@given(times, points)
def test_kernel_periodic_and_even(t, x):
    g = heat_kernel(t, x)
    assert g >= 0
    assert math.isclose(g, heat_kernel(t, x + 1.0), rel_tol=1e-12, abs_tol=1e-13)
    assert math.isclose(g, heat_kernel(t, -x), rel_tol=1e-12, abs_tol=1e-13)


@pytest.mark.parametrize("t", [1e-4, 1e-3, 0.05, FOURIER_SWITCH, 0.5, 3.0])
@pytest.mark.parametrize("x", [0.0, 0.1, 0.25, 0.5])
def test_kernel_matches_brute_image_sum(t, x):
    assert heat_kernel(t, x) == pytest.approx(brute_kernel(t, x), rel=1e-11, abs=1e-12)


def test_representations_agree_at_switch():
    t = FOURIER_SWITCH
    x = np.linspace(0, 0.5, 11)
    K = image_cutoff(t, 1e-14)
    k = np.arange(-K - 3, K + 4)
    img = np.exp(-np.subtract.outer(x, k) ** 2 / (2 * t)).sum(axis=1) / math.sqrt(2 * math.pi * t)
    np.testing.assert_allclose(heat_kernel(t, x), img, rtol=1e-12)


def test_cutoffs_grow_in_the_right_direction():
    assert image_cutoff(10.0, 1e-13) > image_cutoff(0.01, 1e-13)
    assert fourier_cutoff(1e-3, 1e-13) > fourier_cutoff(1.0, 1e-13)


@settings(max_examples=30)
@given(times)
def test_mass_is_one(t):
    mass, bound = kernel_mass(t)
    assert abs(mass - 1.0) <= 1e-9
    assert bound < 1e-9


@settings(max_examples=30)
@given(times)
def test_l2_identity_and_bound(t):
    lhs, rhs = kernel_l2_identity(t)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, rhs)
    assert rhs <= l2_mass_bound(t)


@given(st.floats(1e-4, 100.0), st.floats(-0.5, 0.5))
def test_domination_by_real_line_kernel(t, x):
    assert heat_kernel(t, x) <= real_line_domination_factor(t) * real_line_kernel(t, x) * (1 + 1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_invalid_time(bad):
    with pytest.raises(InvalidParameterError):
        heat_kernel(bad, 0.1)


def test_increment_check_orders_times():
    with pytest.raises(PreconditionError):
        kernel_increment_check(0.2, 0.1, 0.0, 0.1, 0.5)
    rt, rs = kernel_increment_check(0.01, 0.02, 0.1, 0.3, 0.5)
    assert rt > 0 and rs > 0
    assert kernel_increment_check(0.01, 0.01, 0.1, 0.1, 0.5) == (0.0, 0.0)


def test_convolution_exact_on_fourier_modes():
    n = 64
    x = np.arange(n) / n
    u = 2.0 + np.cos(2 * np.pi * 3 * x)
    out = convolve_initial(u, 0.01)
    np.testing.assert_allclose(out, 2.0 + math.exp(-2 * math.pi ** 2 * 9 * 0.01) * np.cos(6 * np.pi * x),
                               atol=1e-14)
    assert heat_multipliers(n, 0.0).tolist() == [1.0] * (n // 2 + 1)


@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16), st.floats(0, 1), st.floats(0, 1))
def test_semigroup_and_mean(vals, s, t):
    u = np.array(vals)
    a = convolve_initial(convolve_initial(u, s), t)
    b = convolve_initial(u, s + t)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert b.mean() == pytest.approx(u.mean(), abs=1e-12)
    assert b.max() <= u.max() + 1e-12 and b.min() >= u.min() - 1e-12


def test_printed_domination_factor_breaks_down_for_large_t():
    # the small-time factor alone would fail here; the switch keeps the bound valid
    t = 2.0
    assert 2 * (1 + math.sqrt(t / (2 * math.pi))) * real_line_kernel(t, 0.0) < heat_kernel(t, 0.0)
    assert real_line_domination_factor(t) * real_line_kernel(t, 0.0) >= heat_kernel(t, 0.0)
