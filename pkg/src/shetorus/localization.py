"""Stopping times, level-by-level restarts and pathwise gluing.

A path that never reaches a level is given the marker :data:`NEVER`
(``inf``); exported tables render it as ``> T_end``.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import regularize_eps, rescale, truncate_M
from .exceptions import ConsistencyError, InvalidParameterError, PreconditionError
from .solver import NoiseStream, TorusGrid, restart_from, simulate, simulate_ensemble
from .stats import wilson_interval

NEVER = math.inf

OSCILLATION_LEVEL = 1.0 - math.exp(-1.0)


def scan_tau(trajectory, eps):
    """First absolute step whose spatial minimum is ``<= eps``, else :data:`NEVER`."""
    hit = np.nonzero(trajectory.running_min <= eps)[0]
    return int(trajectory.start_step + hit[0]) if hit.size else NEVER


def first_crossings(running, level, above=False):
    """Row-wise first step index of ``running <= level`` (or ``> level``); ``-1`` if none."""
    hit = running > level if above else running <= level
    idx = np.argmax(hit, axis=1)
    return np.where(hit.any(axis=1), idx, -1)


def scan_exceedance(ensemble, eps, level=0.95):
    """``P{tau_eps <= T}`` over uncensored replicas with a Wilson interval.

    Returns ``(p_hat, lo, hi, hits, trials)``.
    """
    ok = ~ensemble.censored
    tau = first_crossings(ensemble.running_min[ok], eps)
    hits = int(np.sum(tau >= 0))
    trials = int(ok.sum())
    return (*wilson_interval(hits, trials, level), hits, trials)


@dataclass
class StoppingRecord:
    """Stopping data for one path.

    ``tau_steps`` holds one entry per ``epsilons`` level (absolute step or
    :data:`NEVER`); ``t_k`` holds ``T_0 = 0, T_1, ...`` as steps.
    """

    epsilons: list
    tau_steps: list
    dt: float
    t_end: float
    t_k: list = field(default_factory=lambda: [0])
    glued_horizon: Optional[float] = None
    segments: list = field(default_factory=list, repr=False)

    def tau_times(self):
        return [NEVER if s == NEVER else s * self.dt for s in self.tau_steps]

    def rows(self):
        for eps, s in zip(self.epsilons, self.tau_steps):
            if s == NEVER:
                yield (repr(float(eps)), "", "> T_end", 1)
            else:
                yield (repr(float(eps)), int(s), repr(s * self.dt), 0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "tau_step", "tau_time", "censored_flag"])
            w.writerows(self.rows())


def stopping_record(trajectory, epsilons):
    eps = sorted(epsilons, reverse=True)
    taus = [scan_tau(trajectory, e) for e in eps]
    return StoppingRecord(eps, taus, trajectory.grid.dt, trajectory.grid.t_end)


def ladder(base=math.e, k_max=3, start=1):
    """Levels ``base**-k`` for ``k = start .. k_max``."""
    if base <= 1.0:
        raise InvalidParameterError("ladder base must exceed 1")
    return [base ** -k for k in range(start, k_max + 1)]


def t_k_recursion(base_coef, u0, grid, noise, k_max, ladder_base=math.e, snapshot_stride=1):
    """Stopping times ``T_k`` with the coefficient switched to level ``k`` on ``[T_{k-1}, T_k]``.

    ``T_k`` is the first step strictly after ``T_{k-1}`` at which the spatial
    minimum is ``<= ladder_base**-k``.  One noise stream drives all segments
    (the restarts keep absolute step indices).  Once some ``T_k`` is
    :data:`NEVER` the remaining entries are too.
    """
    levels = ladder(ladder_base, k_max)
    if levels[0] >= base_coef.spec.delta:
        raise PreconditionError(f"first level {levels[0]:.4g} is not below delta={base_coef.spec.delta}")
    t_k = [0]
    segments = []
    prev = None
    for k, eps in enumerate(levels, start=1):
        coef = regularize_eps(base_coef, eps)
        if prev is None:
            seg = simulate(coef, u0, grid, noise, snapshot_stride, stop_below=eps, check_start=False)
        else:
            seg = restart_from(prev, t_k[-1], coef, noise, snapshot_stride=snapshot_stride,
                               stop_below=eps, check_start=False)
        segments.append(seg)
        if seg.stopped_step is None:
            t_k.extend([NEVER] * (k_max - k + 1))
            break
        t_k.append(seg.stopped_step)
        prev = seg
    horizon = grid.t_end if t_k[-1] == NEVER else t_k[-1] * grid.dt
    return StoppingRecord(levels, t_k[1:], grid.dt, grid.t_end, t_k=t_k, glued_horizon=horizon, segments=segments)


@dataclass(frozen=True, eq=False)
class RescaledBlock:
    """Trajectory of ``V = e^k U`` started from ``V(0, .) = 1`` and its oscillation."""

    k: int
    trajectory: object
    oscillation: float


def rescaled_coefficient(base_coef, k, eps):
    """``b_k(u) = e^k b_eps(e^{-k} u)`` and likewise for sigma."""
    return rescale(regularize_eps(base_coef, eps), math.exp(k))


def rescaled_oscillation(base_coef, k, eps, tau, n, dt, noise):
    """Simulate the rescaled block on ``[0, tau]`` and return ``sup |V(s, x) - 1|``."""
    coef = rescaled_coefficient(base_coef, k, eps)
    grid = TorusGrid(n, dt, tau)
    path = simulate(coef, np.ones(n), grid, noise, snapshot_stride=grid.steps)
    osc = float(max(np.max(path.running_max) - 1.0, 1.0 - np.min(path.running_min)))
    return RescaledBlock(k, path, osc)


def oscillation_probability(base_coef, k, eps, tau, n, dt, master_seed, replicas, level=0.95, runner=None):
    """Estimate ``P{sup |V - 1| >= 1 - 1/e}`` over an ensemble.

    Returns ``(p_hat, lo, hi, oscillations)``.
    """
    coef = rescaled_coefficient(base_coef, k, eps)
    grid = TorusGrid(n, dt, tau)
    ens = (runner or simulate_ensemble)(coef, 1.0, grid, master_seed, replicas, grid.steps)
    osc = np.maximum(ens.running_max.max(axis=1) - 1.0, 1.0 - ens.running_min.min(axis=1))
    ok = ~ens.censored
    hits = int(np.sum(osc[ok] >= OSCILLATION_LEVEL))
    return (*wilson_interval(hits, int(ok.sum()), level), osc)


# -- gluing -------------------------------------------------------------


@dataclass(frozen=True)
class PairCertificate:
    eps_coarse: float
    eps_fine: float
    agree_through: int
    full_horizon: bool


@dataclass(frozen=True)
class GlueCertificate:
    """Pairwise agreement certificates across a ladder.

    ``agree_through`` is the last absolute step at which both levels are
    bit-identical (per-step statistics and any snapshot up to that step).
    """

    pairs: tuple
    glued_horizon_step: float
    glued: object = field(repr=False, default=None)

    def composes(self):
        """Transitivity: agreement of (a, c) extends at least as far as min over (a, b), (b, c)."""
        d = {(p.eps_coarse, p.eps_fine): p.agree_through for p in self.pairs}
        eps = sorted({p.eps_coarse for p in self.pairs} | {p.eps_fine for p in self.pairs}, reverse=True)
        for i in range(len(eps)):
            for j in range(i + 1, len(eps)):
                for m in range(i + 1, j):
                    if d[(eps[i], eps[j])] < min(d[(eps[i], eps[m])], d[(eps[m], eps[j])]):
                        return False
        return True


def _agree(a, b, through):
    """Bit-level agreement of two paths on absolute steps ``<= through``."""
    j = through - a.start_step + 1
    for name in ("running_min", "running_max", "mean", "variance"):
        if not np.array_equal(getattr(a, name)[:j], getattr(b, name)[:j]):
            return False
    sel = a.snapshot_steps <= through
    return bool(np.array_equal(a.snapshots[sel], b.snapshots[sel]))


def certify_pair(coarse, fine, eps_coarse, eps_fine):
    tau = scan_tau(coarse, eps_coarse)
    full = tau == NEVER
    through = coarse.end_step if full else int(tau)
    if not _agree(coarse, fine, through):
        raise ConsistencyError(
            f"levels {eps_coarse:.4g} and {eps_fine:.4g} disagree before step {through}; scheme is not deterministic")
    return PairCertificate(float(eps_coarse), float(eps_fine), through, full)


def glue(paths_by_eps):
    """Certify a ladder of paths driven by the same noise.

    ``paths_by_eps`` maps each level to its path.  Paths at levels
    ``eps' < eps`` must agree exactly up to and including the first step
    where the level-``eps`` path has minimum ``<= eps``: before that step
    every evaluated value exceeds ``eps``, where both coefficients equal the
    base one.  The glued solution is the finest path up to its own stopping
    step.

    Raises
    ------
    ConsistencyError
        On any bit-level disagreement.
    """
    eps = sorted(paths_by_eps, reverse=True)
    pairs = []
    for i in range(len(eps)):
        for j in range(i + 1, len(eps)):
            pairs.append(certify_pair(paths_by_eps[eps[i]], paths_by_eps[eps[j]], eps[i], eps[j]))
    finest = paths_by_eps[eps[-1]]
    return GlueCertificate(tuple(pairs), scan_tau(finest, eps[-1]), finest)


def glue_ladder(base_coef, epsilons, u0, grid, noise, snapshot_stride=1):
    paths = {e: simulate(regularize_eps(base_coef, e), u0, grid, noise, snapshot_stride) for e in epsilons}
    return glue(paths)


def glue_ensemble(base_coef, epsilons, u0, grid, master_seed, replicas, snapshot_stride=1, runner=None):
    """Run every level for every replica and return one certificate per replica."""
    runner = runner or simulate_ensemble
    ens = {e: runner(regularize_eps(base_coef, e), u0, grid, master_seed, replicas, snapshot_stride)
           for e in epsilons}
    n = len(next(iter(ens.values())))
    return [glue({e: ens[e].path(i) for e in epsilons}) for i in range(n)]


# -- superlinear M-ladder -----------------------------------------------


@dataclass
class MLadderResult:
    """Exceedance of the levels ``M`` by ``sup_x u``.

    ``tau_steps[i, j]`` is the first step with spatial max ``> M_levels[j]``
    on replica ``i`` (``-1`` if none).
    """

    M_levels: list
    tau_steps: np.ndarray
    fractions: list
    intervals: list
    sup_moment: float
    p: int
    chebyshev: list
    replicas: int
    t_end: float
    ensemble: object = field(repr=False, default=None)


def sup_ladder_M(base_coef, grid, M_levels, u0, master_seed, replicas, p=4, truncation=None,
                 snapshot_stride=None, runner=None):
    """First exceedance times of the ``M`` ladder and the Chebyshev comparison.

    The equation is run with coefficients truncated at ``truncation``
    (default ``e * max(M_levels)``), which agree with the original ones until
    the field first exceeds that level, so every ``tau_M`` below it is
    unaffected.  ``chebyshev[j] = E[(sup |u|)^p] / M_j^p`` with the moment
    estimated from the same ensemble.
    """
    M_levels = sorted(float(m) for m in M_levels)
    if M_levels[0] <= 1.0:
        raise InvalidParameterError("M levels must exceed 1")
    level = truncation or math.e * M_levels[-1]
    if level < M_levels[-1]:
        raise InvalidParameterError("truncation must not be below the largest M")
    coef = truncate_M(base_coef, level)
    ens = (runner or simulate_ensemble)(coef, u0, grid, master_seed, replicas, snapshot_stride or grid.steps)
    ok = ~ens.censored
    taus = np.stack([first_crossings(ens.running_max, m, above=True) for m in M_levels], axis=1)
    sup = ens.sup_abs()[ok]
    moment = float(np.mean(sup ** p))
    fractions, intervals = [], []
    for j in range(len(M_levels)):
        ph, lo, hi = wilson_interval(int(np.sum(taus[ok, j] >= 0)), int(ok.sum()))
        fractions.append(ph)
        intervals.append((lo, hi))
    cheb = [moment / m ** p for m in M_levels]
    return MLadderResult(M_levels, taus, fractions, intervals, moment, p, cheb, int(ok.sum()), grid.t_end, ens)
