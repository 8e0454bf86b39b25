import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shetorus.coefficients import (
    CoefficientSpec,
    check_critical,
    check_ordered,
    growth_constants,
    interpolate_alpha,
    regularize_eps,
    rescale,
    same_function,
    truncate_M,
    uniform_gap,
)
from shetorus.exceptions import EstimationError, HypothesisError, InvalidParameterError, PreconditionError

SUB = CoefficientSpec(kind="power_log", A1=0.5, A2=0.2, delta=0.5)
CRIT = CoefficientSpec(kind="power_log", A1=1.0, A2=0.2, delta=math.exp(-1))


def test_drift_values_near_zero():
    z = math.exp(-4)
    assert SUB.b(z)[()] == pytest.approx(-z * 2.0, rel=1e-15)
    assert SUB.sigma(z)[()] == pytest.approx(z * 4 ** 0.2, rel=1e-15)
    assert SUB.b(0.0)[()] == 0.0 and SUB.sigma(0.0)[()] == 0.0


@given(st.floats(1e-12, 5.0))
def test_odd_extension(z):
    assert SUB.b(-z)[()] == -SUB.b(z)[()]
    assert SUB.sigma(-z)[()] == -SUB.sigma(z)[()]


def test_linear_beyond_delta():
    d = SUB.delta
    slope = SUB.b(d)[()] / d
    z = np.array([0.7, 1.3, 10.0])
    np.testing.assert_allclose(SUB.b(z), slope * z, rtol=1e-14)


@pytest.mark.parametrize("kw", [dict(A1=0.0), dict(A1=1.5), dict(A2=0.25), dict(delta=1.0), dict(sign=0),
                                dict(kind="bogus"), dict(tail="bogus"), dict(kind="custom_table")])
def test_invalid_specs(kw):
    with pytest.raises(InvalidParameterError):
        CoefficientSpec(**kw)


def test_unsafe_hypotheses_allow_large_A2():
    assert CoefficientSpec(A2=0.3, unsafe_hypotheses=True).A2 == 0.3


def test_custom_table_interpolates():
    zs = (0.1, 0.2, 0.5, 0.8)
    bs = (-0.1, -0.3, -0.4, -0.5)
    spec = CoefficientSpec(kind="custom_table", table=(zs, bs), delta=0.5)
    np.testing.assert_allclose(spec.b(np.array(zs[:3])), bs[:3], atol=1e-14)


@given(st.floats(1e-6, 3.0))
@settings(max_examples=50)
def test_derivative_matches_finite_difference(z):
    if abs(z - SUB.delta) < 1e-4:
        return
    h = 1e-7 * z
    for which in ("b", "sigma"):
        fd = (SUB.evaluate(which, z + h) - SUB.evaluate(which, z - h)) / (2 * h)
        assert SUB.derivative(which, z)[()] == pytest.approx(fd[()], rel=1e-5, abs=1e-6)


class TestEps:
    def test_slope_at_e_minus_4(self):
        eps = math.exp(-4)
        c = regularize_eps(SUB, eps)
        assert abs(c.b(eps / 3)[()] / (eps / 3)) == pytest.approx(2.0, abs=1e-14)
        assert c.b(eps)[()] == SUB.b(eps)[()]

    @given(st.floats(1e-300, 10.0))
    def test_agrees_above_eps(self, z):
        eps = math.exp(-3)
        c = regularize_eps(SUB, eps)
        if z >= eps:
            assert c.b(z)[()] == SUB.b(z)[()]
            assert c.sigma(z)[()] == SUB.sigma(z)[()]
        else:
            assert abs(c.b(z)[()]) <= abs(SUB.b(z)[()]) + 1e-300

    @pytest.mark.parametrize("eps", [0.0, 0.5, 0.7, -0.1])
    def test_eps_range(self, eps):
        with pytest.raises(InvalidParameterError):
            regularize_eps(SUB, eps)

    def test_gap_decreases(self):
        gaps = [uniform_gap(regularize_eps(SUB, math.exp(-n)).b, SUB.b, 1.0) for n in range(2, 17)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-6

    def test_log_ratio_stable(self):
        r = [regularize_eps(SUB, math.exp(-n)).constants_b.log_ratio for n in range(4, 17)]
        assert max(r) <= 1.1 * min(r)


class TestAlpha:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_anchor_exact(self, alpha):
        c = interpolate_alpha(CRIT, alpha)
        d = CRIT.delta
        assert c.b(d)[()] == CRIT.b(d)[()]

    def test_monotone_in_alpha(self):
        z = np.geomspace(1e-8, CRIT.delta, 200)
        vals = [interpolate_alpha(CRIT, a).b(z) for a in (0.5, 0.9, 0.99)]
        # theta = -1: more negative as alpha grows
        assert np.all(vals[1] <= vals[0] + 1e-15) and np.all(vals[2] <= vals[1] + 1e-15)

    def test_requires_constant_sign(self):
        spec = CoefficientSpec(kind="power_log_sin", A1=0.5)
        with pytest.raises(HypothesisError):
            check_critical(spec)

    def test_alpha_range(self):
        with pytest.raises(InvalidParameterError):
            interpolate_alpha(CRIT, 1.0)


def test_truncation_freezes_values():
    spec = SUB.replace(tail="log_superlinear")
    c = truncate_M(spec, math.e ** 2)
    assert c.b(100.0)[()] == spec.b(math.e ** 2)[()]
    assert c.constants_b is not None
    with pytest.raises(InvalidParameterError):
        truncate_M(spec, 1.0)


def test_superlinear_not_lipschitz():
    with pytest.raises(EstimationError):
        growth_constants(SUB.replace(tail="log_superlinear"), "b")


def test_growth_constants_linear_is_exact():
    lin = CoefficientSpec(kind="none", sigma_kind="none", b_slope=2.5)
    g = growth_constants(lin, "b")
    assert g.lipschitz == 2.5
    assert g.growth == pytest.approx(2.5, rel=1e-12)


def test_truncated_lipschitz():
    lin = CoefficientSpec(kind="none", sigma_kind="none", tail="log_superlinear")
    g = growth_constants(truncate_M(lin, math.exp(10)), "b")
    # z log z has slope 1 + log z, which is 11 at the truncation level
    assert g.lipschitz == pytest.approx(11.0, rel=1e-12)


@given(st.floats(0.1, 10.0), st.floats(1e-3, 5.0))
def test_rescale(s, z):
    c = rescale(SUB, s)
    assert c.b(z)[()] == pytest.approx(s * SUB.b(z / s)[()], rel=1e-14, abs=1e-300)


def test_ordering_helpers():
    hi = SUB.replace(b_slope=0.5)
    check_ordered(SUB, hi, 5.0)
    with pytest.raises(PreconditionError):
        check_ordered(hi, SUB, 5.0)
    assert same_function(SUB, hi, 5.0, "sigma")
    assert not same_function(SUB, hi, 5.0, "b")
