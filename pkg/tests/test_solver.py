import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shetorus.coefficients import CoefficientSpec, regularize_eps
from shetorus.exceptions import BlowupError, InvalidParameterError, PreconditionError
from shetorus.io import read_snapshots, write_snapshots, write_summary_csv
from shetorus.solver import (
    NoiseStream,
    TorusGrid,
    restart_from,
    simulate,
    simulate_ensemble,
    simulate_pair_common_noise,
)

ZERO = CoefficientSpec(kind="none", sigma_kind="none")
ADD = CoefficientSpec(kind="none", sigma_kind="none", sigma_const=1.0)
SUB = regularize_eps(CoefficientSpec(A1=0.5, A2=0.2, delta=0.5), math.exp(-6))


@pytest.mark.parametrize("kw", [dict(n=100, dt=1e-5, t_end=0.01), dict(n=4, dt=1e-5, t_end=0.01),
                                dict(n=64, dt=0.1, t_end=1.0), dict(n=64, dt=1e-5, t_end=1.5e-5),
                                dict(n=64, dt=-1e-5, t_end=0.01)])
def test_grid_validation(kw):
    with pytest.raises(InvalidParameterError):
        TorusGrid(**kw)


def test_noise_random_access():
    a = NoiseStream(7, 3)
    forward = [a.normals(s, 16).copy() for s in range(200)]
    b = NoiseStream(7, 3)
    for s in (150, 3, 199, 64, 0):
        np.testing.assert_array_equal(b.normals(s, 16), forward[s])
    assert not np.array_equal(NoiseStream(7, 4).normals(0, 16), forward[0])
    assert not np.array_equal(NoiseStream(8, 3).normals(0, 16), forward[0])


def test_noise_moments():
    z = np.concatenate([NoiseStream(1, 0).block(j, 256).ravel() for j in range(20)])
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01


def test_cos_mode_decay():
    g = TorusGrid(256, 1e-5, 0.1)
    path = simulate(ZERO, 1 + np.cos(2 * np.pi * g.x), g, NoiseStream(0), snapshot_stride=g.steps)
    exact = math.exp(-2 * math.pi ** 2 * 0.1)
    err = np.max(np.abs(path.final - 1 - exact * np.cos(2 * np.pi * g.x))) / exact
    assert err < 0.01


def test_constant_drift_grows_linearly():
    g = TorusGrid(32, 1e-4, 0.01)
    c = CoefficientSpec(kind="none", sigma_kind="none", b_const=2.0)
    path = simulate(c, 1.0, g, NoiseStream(0))
    np.testing.assert_allclose(path.mean, 1.0 + 2.0 * path.times, rtol=1e-12)


def test_additive_noise_mean_zero():
    g = TorusGrid(64, 1e-4, 0.01)
    ens = simulate_ensemble(ADD, 0.0, g, 5, range(200), g.steps)
    assert abs(ens.final.mean()) < 4 * ens.final.std() / math.sqrt(ens.final.size / 8)


def test_negative_initial_rejected():
    g = TorusGrid(16, 1e-3, 0.01)
    with pytest.raises(PreconditionError):
        simulate(SUB, -np.ones(16), g, NoiseStream(0))
    simulate(SUB, -np.ones(16), g, NoiseStream(0), allow_negative=True)


@settings(max_examples=5, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2 ** 32))
def test_ensemble_matches_single_runs_for_any_batch(batch, seed):
    g = TorusGrid(16, 1e-3, 0.05)
    ens = simulate_ensemble(SUB, 1.0, g, seed, range(6), 10, batch=batch)
    for i in (0, 5):
        p = simulate(SUB, 1.0, g, NoiseStream(seed, i), 10)
        np.testing.assert_array_equal(ens.snapshots[i], p.snapshots)
        np.testing.assert_array_equal(ens.running_min[i], p.running_min)


def test_restart_reproduces_continuation():
    g = TorusGrid(32, 1e-4, 0.02)
    noise = NoiseStream(3, 1)
    full = simulate(SUB, 1.0, g, noise, snapshot_stride=10)
    part = restart_from(full, 100, SUB)
    np.testing.assert_array_equal(part.final, full.final)
    np.testing.assert_array_equal(part.running_min, full.running_min[100:])
    with pytest.raises(PreconditionError):
        restart_from(full, 105, SUB)


def test_blowup_raises_for_path_and_censors_in_ensemble():
    g = TorusGrid(16, 1e-3, 0.01)
    bad = CoefficientSpec(kind="none", sigma_kind="none", b_slope=1e306)
    with pytest.raises(BlowupError):
        simulate(bad, 1.0, g, NoiseStream(0))
    ens = simulate_ensemble(bad, 1.0, g, 0, range(3))
    assert ens.censored.all()


def test_comparison_under_common_noise():
    g = TorusGrid(32, 1e-4, 0.02)
    hi = regularize_eps(CoefficientSpec(A1=0.5, A2=0.2, delta=0.5, b_slope=0.5), math.exp(-6))
    p1, p2 = simulate_pair_common_noise(SUB, hi, 0.9, 1.0, g, NoiseStream(2), snapshot_stride=1)
    assert np.max(p1.snapshots - p2.snapshots) <= 1e-8
    with pytest.raises(PreconditionError):
        simulate_pair_common_noise(hi, SUB, 0.9, 1.0, g, NoiseStream(2))


def test_stop_below_halts():
    g = TorusGrid(32, 1e-4, 0.05)
    c = CoefficientSpec(kind="none", sigma_kind="none", b_slope=-20.0)
    p = simulate(c, 1.0, g, NoiseStream(0), stop_below=0.5)
    assert p.stopped_step is not None
    assert p.running_min[-1] <= 0.5 < p.running_min[-2]


def test_snapshot_io_roundtrip(tmp_path):
    g = TorusGrid(16, 1e-3, 0.02)
    p = simulate(SUB, 1.0, g, NoiseStream(0), snapshot_stride=5)
    write_snapshots(tmp_path / "s.bin", p)
    n, dt, stride, arr = read_snapshots(tmp_path / "s.bin")
    assert (n, dt, stride) == (16, 1e-3, 5)
    np.testing.assert_array_equal(arr, p.snapshots)
    write_summary_csv(tmp_path / "s.csv", p)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,min,max,mean,variance" and len(lines) == g.steps + 2
