"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a pass/fail line that is printed in the terminal summary.
"""

import math
import time
from pathlib import Path

import pytest

from shetorus import suites
from shetorus.coefficients import CoefficientSpec, interpolate_alpha, regularize_eps, uniform_gap
from shetorus.presets import default_config

pytestmark = pytest.mark.acceptance

_CACHE = {}


def run_suite(name, **overrides):
    """Run a suite on its canonical config once per session; returns ``(claims, seconds)``."""
    key = (name, tuple(sorted(overrides.items())))
    if key not in _CACHE:
        cfg = default_config(name).with_overrides(**overrides)
        t0 = time.perf_counter()
        reports = suites.SUITES[name](cfg, suites.make_runner(1))
        _CACHE[key] = ({r.claim: r for r in reports}, time.perf_counter() - t0)
    return _CACHE[key]


def test_criterion_01_kernel(criterion):
    claims, secs = run_suite("kernel")
    names = ["kernel_mass", "kernel_l2_identity", "kernel_l2_bound", "kernel_semigroup"]
    ok = all(claims[n].passed for n in names) and secs < 10
    criterion(1, ok, f"kernel identities, max mass err {claims['kernel_mass'].estimate:.2e}, {secs:.1f} s")
    assert ok


def test_criterion_02_solver_oracles(criterion):
    claims, secs = run_suite("moments")
    cos, var = claims["solver_cos_decay"], claims["solver_additive_variance"]
    ok = cos.passed and var.passed and var.replicas >= 500 and secs < 300
    criterion(2, ok, f"cos decay rel err {cos.estimate:.2e}; variance {var.estimate:.5f} vs {var.bound:.6f} "
                     f"(se {var.details['standard_error']:.5f}); {secs:.0f} s")
    assert cos.estimate <= 0.01
    assert abs(var.estimate - math.sqrt(0.01 / math.pi)) <= 3 * var.details["standard_error"]
    assert ok


def test_criterion_03_regularization_algebra(criterion):
    t0 = time.perf_counter()
    sub = CoefficientSpec(kind="power_log", A1=0.5, A2=0.2, delta=0.5)
    eps = math.exp(-4)
    slope = abs(float(regularize_eps(sub, eps).b(eps / 2)[()]) / (eps / 2))
    crit = CoefficientSpec(kind="power_log", A1=1.0, A2=0.2, delta=math.exp(-1))
    d = crit.delta
    anchors = all(interpolate_alpha(crit, a / 10).b(d)[()] == crit.b(d)[()] for a in range(1, 10))
    gaps = [uniform_gap(regularize_eps(sub, math.exp(-n)).b, sub.b, 1.0) for n in range(2, 17)]
    ratios = [regularize_eps(sub, math.exp(-n)).constants_b.log_ratio for n in range(4, 17)]
    secs = time.perf_counter() - t0
    ok = (abs(slope - 2.0) <= 1e-14 and anchors and all(b < a for a, b in zip(gaps, gaps[1:]))
          and gaps[-1] < 1e-6 and max(ratios) <= 1.1 * min(ratios) and secs < 30)
    criterion(3, ok, f"slope {slope!r}, final gap {gaps[-1]:.2e}, ratio spread {max(ratios) / min(ratios):.4f}")
    assert ok


def test_criterion_04_localization(criterion):
    claims, secs = run_suite("positivity")
    g, tau = claims["glue_bit_exact"], claims["tau_monotone"]
    ok = g.passed and tau.passed and g.replicas == 50 and secs < 600
    criterion(4, ok, f"{g.details['pairs_with_crossing']} of {g.details['pairs_total']} pairs cross before T; "
                     f"tau violations {tau.estimate}")
    assert ok


def test_criterion_05_comparison(criterion):
    claims, secs = run_suite("comparison")
    o, c = claims["comparison_ordered"], claims["comparison_negative_control"]
    ok = o.passed and c.passed and o.replicas == 100 and secs < 600
    criterion(5, ok, f"max(u1 - u2) = {o.estimate:.3g}; control max = {c.estimate:.3g}; {secs:.0f} s")
    assert o.estimate <= 1e-8 and c.estimate > 1e-8
    assert ok


def test_criterion_06_positivity_ladder(criterion):
    claims, secs = run_suite("positivity")
    r = claims["positivity_ladder"]
    ok = r.passed and r.details["monotone"] and r.replicas == 500 and secs < 1200
    criterion(6, ok, f"P(tau <= T) = {r.estimate} over eps e^-2, e^-4, e^-6; {secs:.0f} s")
    assert ok


def test_criterion_07_moment_bounds(criterion):
    claims, _ = run_suite("moments")
    spot = claims["moment_bound_closed_form"]
    m2, m4 = claims["moment_below_bound_p2"], claims["moment_below_bound_p4"]
    ok = spot.passed and m2.passed and m4.passed and abs(spot.estimate - 706.8493172) < 1e-6
    criterion(7, ok, f"spot {spot.estimate:.10g}; log E|u|^2 {math.log(m2.estimate):.3f} <= {m2.bound['log']:.4g}")
    assert ok


@pytest.mark.xfail(strict=True, reason="no finite m* <= 1e4 exists for this parameter grid; see README")
def test_criterion_08_tail_exponent(criterion):
    claims, secs = run_suite("tail")
    tail = [r for n, r in claims.items() if n.startswith("tail_m_star")]
    found = sum(r.passed for r in tail)
    ok = claims["stirling_m2"].passed and len(tail) == 9 and found == 9 and secs < 5
    criterion(8, ok, f"finite m* for {found} of {len(tail)} (A1, A2); Stirling 6 <= 12.77 holds")
    assert ok


def test_criterion_09_critical(criterion):
    claims, secs = run_suite("critical")
    r = claims["limit_consistency"]
    ok = r.passed and r.replicas == 50 and secs < 900
    criterion(9, ok, f"gaps {[f'{g:.2e}' for g in r.estimate]}, order violation {r.details['order_violation']:.2e}")
    assert ok


def test_criterion_10_superlinear(criterion):
    claims, secs = run_suite("superlinear")
    r = claims["superlinear_ladder"]
    ok = r.passed and secs < 900
    criterion(10, ok, f"fractions {[round(f, 4) for f in r.estimate]} vs Chebyshev {[f'{c:.3g}' for c in r.bound]}")
    assert ok


def _bytes(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir()) if p.suffix in (".csv", ".json")}


def test_criterion_11_reproducibility(criterion, tmp_path):
    same = True
    for name, reps in (("kernel", None), ("comparison", 40), ("tail", None)):
        cfg = default_config(name).with_overrides(replicas=reps)
        outs = []
        for i, workers in enumerate((1, 1, 2)):
            d = tmp_path / f"{name}{i}"
            suites.run(cfg, name, str(d), workers=workers)
            outs.append(_bytes(d))
        same &= outs[0] == outs[1] == outs[2] and len(outs[0]) > 5
    criterion(11, same, "kernel, comparison (40 replicas), tail: reruns and 1 vs 2 workers byte-identical")
    assert same
