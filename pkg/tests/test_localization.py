import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binomtest

from shetorus.coefficients import CoefficientSpec
from shetorus.exceptions import InvalidParameterError, PreconditionError
from shetorus.localization import (
    NEVER,
    OSCILLATION_LEVEL,
    first_crossings,
    glue,
    glue_ensemble,
    glue_ladder,
    ladder,
    oscillation_probability,
    rescaled_coefficient,
    scan_tau,
    stopping_record,
    sup_ladder_M,
    t_k_recursion,
)
from shetorus.solver import NoiseStream, TorusGrid, simulate
from shetorus.stats import bootstrap, wilson_interval

BASE = CoefficientSpec(A1=0.5, A2=0.2, delta=0.5)
FAST = CoefficientSpec(A1=0.5, A2=0.2, delta=0.5, b_slope=-40.0)


def test_first_crossings():
    run = np.array([[1.0, 0.5, 0.2], [1.0, 0.9, 0.8]])
    assert first_crossings(run, 0.5).tolist() == [1, -1]
    assert first_crossings(run, 0.85, above=True).tolist() == [0, 0]


def test_ladder():
    assert ladder(math.e, 3) == pytest.approx([math.exp(-1), math.exp(-2), math.exp(-3)])
    with pytest.raises(InvalidParameterError):
        ladder(1.0)


def test_stopping_record_csv(tmp_path):
    g = TorusGrid(32, 1e-4, 0.05)
    p = simulate(FAST, 1.0, g, NoiseStream(1))
    rec = stopping_record(p, [math.exp(-1), 1e-30])
    assert rec.tau_steps[0] != NEVER and rec.tau_steps[1] == NEVER
    rec.to_csv(tmp_path / "stop.csv")
    rows = list(csv.reader(open(tmp_path / "stop.csv")))
    assert rows[0] == ["epsilon", "tau_step", "tau_time", "censored_flag"]
    assert rows[2][2] == "> T_end" and rows[2][3] == "1"


def test_tau_monotone_in_eps():
    g = TorusGrid(32, 1e-4, 0.05)
    p = simulate(FAST, 1.0, g, NoiseStream(2))
    taus = [scan_tau(p, e) for e in (0.5, 0.3, 0.1, 0.01)]
    assert all(b >= a for a, b in zip(taus, taus[1:]))


def test_t_k_recursion():
    g = TorusGrid(32, 1e-4, 0.05)
    rec = t_k_recursion(FAST, 1.0, g, NoiseStream(4), 3)
    t = rec.t_k
    assert t[0] == 0
    finite = [s for s in t[1:] if s != NEVER]
    assert finite and all(b > a for a, b in zip([0] + finite, finite))
    with pytest.raises(PreconditionError):
        t_k_recursion(BASE.replace(delta=0.2), 1.0, g, NoiseStream(4), 2)


def test_glue_certifies_shared_noise():
    g = TorusGrid(32, 1e-4, 0.05)
    cert = glue_ladder(FAST, [math.exp(-1), math.exp(-2), math.exp(-3)], 1.0, g, NoiseStream(5))
    assert cert.composes()
    assert any(not p.full_horizon for p in cert.pairs)


def test_glue_detects_different_noise():
    from shetorus.coefficients import regularize_eps
    from shetorus.exceptions import ConsistencyError

    g = TorusGrid(32, 1e-4, 0.01)
    a = simulate(regularize_eps(FAST, 0.3), 1.0, g, NoiseStream(5))
    b = simulate(regularize_eps(FAST, 0.1), 1.0, g, NoiseStream(6))
    with pytest.raises(ConsistencyError):
        glue({0.3: a, 0.1: b})


def test_glue_ensemble_runs():
    g = TorusGrid(16, 1e-3, 0.05)
    certs = glue_ensemble(FAST, [0.3, 0.1], 1.0, g, 0, range(4))
    assert len(certs) == 4 and all(c.composes() for c in certs)


def test_rescaled_block():
    c = rescaled_coefficient(BASE, 2, math.exp(-4))
    assert c.b(1.0)[()] == pytest.approx(math.e ** 2 * BASE.b(math.exp(-2))[()], rel=1e-14)
    p, lo, hi, osc = oscillation_probability(BASE, 2, math.exp(-4), 1e-3, 16, 1e-4, 0, range(30))
    assert 0 <= lo <= p <= hi <= 1 and len(osc) == 30
    assert 0 < OSCILLATION_LEVEL < 1


def test_sup_ladder():
    spec = BASE.replace(tail="log_quarter_superlinear")
    g = TorusGrid(16, 1e-3, 0.05)
    r = sup_ladder_M(spec, g, [math.e ** 3, math.e ** 4], 20.0, 0, range(40))
    assert r.fractions[0] >= r.fractions[1]
    assert all(f <= c for f, c in zip(r.fractions, r.chebyshev))
    with pytest.raises(InvalidParameterError):
        sup_ladder_M(spec, g, [0.5], 20.0, 0, range(4))


@given(st.integers(0, 200), st.integers(1, 200))
def test_wilson_matches_scipy(k, n):
    k = min(k, n)
    p, lo, hi = wilson_interval(k, n)
    ci = binomtest(k, n).proportion_ci(0.95, method="wilson")
    assert lo == pytest.approx(ci.low, abs=1e-12) and hi == pytest.approx(ci.high, abs=1e-12)
    assert p == k / n


def test_bootstrap_deterministic_and_covers():
    x = np.random.default_rng(0).normal(3.0, 1.0, 400)
    a = bootstrap(np.mean, x, 500, seed=1)
    assert a == bootstrap(np.mean, x, 500, seed=1)
    est, lo, hi, se = a
    assert lo < 3.0 < hi and se == pytest.approx(0.05, rel=0.2)
