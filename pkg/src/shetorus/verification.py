"""Closed-form bound evaluators and Monte Carlo estimators.

The bound evaluators are pure functions of their parameters.  Bounds that
overflow a double are also available in log form (``log_*``); the plain
versions return ``inf`` in that case.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .coefficients import interpolate_alpha, regularize_eps
from .exceptions import InsufficientReplicasError, InvalidParameterError
from .localization import scan_exceedance
from .solver import simulate_ensemble
from .stats import bootstrap

TOL_COMPARISON = 1e-8
MIN_REPLICAS = 30
_TWO16_PI2 = 2.0 ** 16 * math.pi ** 2


# -- moment bounds --------------------------------------------------------


@dataclass(frozen=True)
class MomentBoundParams:
    """Constants entering the moment and Hölder bounds.

    For the ``delta_form`` variant, ``L_b`` and ``L_sigma`` are read as the
    Lipschitz constants on ``[delta, inf)`` and ``C_b_delta``,
    ``C_sigma_delta`` as the suprema on ``[0, delta]``.
    """

    p: float
    T: float
    L_b: float
    L_sigma: float
    u0_norm: float
    C_b_delta: float = 0.0
    C_sigma_delta: float = 0.0
    b0: float = 0.0
    sigma0: float = 0.0

    def __post_init__(self):
        if not self.p >= 2:
            raise InvalidParameterError(f"p must be >= 2, got {self.p}")
        for name in ("T", "L_b", "L_sigma", "u0_norm", "C_b_delta", "C_sigma_delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
        if self.H <= 0:
            raise InvalidParameterError("H = L_b + p^2 L_sigma^4 must be positive")

    @property
    def H(self):
        return self.L_b + self.p ** 2 * self.L_sigma ** 4

    @property
    def M_const(self):
        m = self.u0_norm
        if self.b0:
            m += abs(self.b0) / self.L_b if self.L_b > 0 else math.inf
        if self.sigma0:
            m += abs(self.sigma0) / self.L_sigma if self.L_sigma > 0 else math.inf
        return m


def kappa(p, L_b, L_sigma):
    """``4 L_b + 2^16 pi^2 p^2 L_sigma^4``."""
    return 4.0 * L_b + _TWO16_PI2 * p ** 2 * L_sigma ** 4


def log_moment_bound_rhs(params, variant="zero_at_origin"):
    """Natural log of :func:`moment_bound_rhs`; ``inf`` when a needed constant is zero."""
    P = params
    if variant == "zero_at_origin":
        base = P.u0_norm
    elif variant == "delta_form":
        if (P.C_b_delta and P.L_b == 0) or (P.C_sigma_delta and P.L_sigma == 0):
            return math.inf
        base = P.u0_norm
        if P.C_b_delta:
            base += P.C_b_delta / (4.0 * P.L_b)
        if P.C_sigma_delta:
            base += P.C_sigma_delta / (4.0 * P.L_sigma)
    else:
        raise InvalidParameterError(f"unknown variant {variant!r}")
    if base == 0:
        return -math.inf
    # the exponent is p * kappa * T
    return P.p * math.log(2.0 * base) + P.p * kappa(P.p, P.L_b, P.L_sigma) * P.T


def moment_bound_rhs(params, variant="zero_at_origin"):
    """Upper bound on ``sup_{t <= T, x} E|u(t, x)|^p``.

    ``zero_at_origin``: ``2^p |u0|^p exp((4 L_b p + 2^16 pi^2 p^3 L_sigma^4) T)``.
    ``delta_form``: the same with ``|u0|`` replaced by
    ``|u0| + C_{b,delta}/(4 L_{b,delta}) + C_{sigma,delta}/(4 L_{sigma,delta})``.
    A zero Lipschitz constant in ``delta_form`` gives ``inf``.
    """
    lg = log_moment_bound_rhs(params, variant)
    if lg > 709.0:
        return math.inf
    return math.exp(lg)


def holder_bound_rhs(params, beta, increment, gap, t, C_beta=1.0, C=1.0, u0_holder=0.0, gamma=1.0,
                     H=None, M=None):
    """Right-hand side of the Hölder increment bounds.

    Parameters
    ----------
    params : MomentBoundParams
    beta : float
        In ``(0, 1/2 ^ gamma)``.
    increment : {"space", "time"}
    gap : float
        Torus distance (space) or ``t' - t`` (time, must be ``< 1``).
    t : float
        ``t`` for space increments, ``t'`` for time increments.
    C_beta, C : float
        The generic constants in front and in the exponent.
    H, M : float, optional
        Override ``params.H`` and ``params.M_const``.
    """
    if not 0.0 < beta < min(0.5, gamma):
        raise InvalidParameterError(f"beta must lie in (0, {min(0.5, gamma)}), got {beta}")
    if gap < 0:
        raise InvalidParameterError("gap must be >= 0")
    if increment == "time" and gap >= 1.0:
        raise InvalidParameterError("time gap must be < 1")
    H = params.H if H is None else H
    M = params.M_const if M is None else M
    p = params.p
    sp = math.sqrt(p)
    b0, s0 = abs(params.b0), abs(params.sigma0)
    growth = math.exp(C * H * t)
    tail = (params.L_b * M * growth * H ** (beta / 2 - 1)
            + sp * params.L_sigma * M * growth * (H ** (beta / 2 - 0.25) + H ** (beta / 2 - 0.5)))
    if increment == "space":
        brace = (u0_holder + b0 * t ** (1 - beta / 2)
                 + sp * s0 * (t ** (0.25 - beta / 2) + t ** (0.5 - beta / 2)) + tail)
        return C_beta * gap ** beta * brace
    if increment == "time":
        t0 = max(t - gap, 0.0)
        brace = (u0_holder + b0 * (1 + t0 ** (1 - beta / 2))
                 + sp * s0 * (1 + t0 ** (0.25 - beta / 2) + t0 ** (0.5 - beta / 2)) + tail)
        return C_beta * gap ** (beta / 2) * brace
    raise InvalidParameterError(f"increment must be 'space' or 'time', got {increment!r}")


# -- moment estimators ----------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    ci_lo: float
    ci_hi: float
    standard_error: float
    replicas: int


def _samples(ensemble, steps):
    if len(ensemble) - int(ensemble.censored.sum()) < MIN_REPLICAS:
        raise InsufficientReplicasError(f"need at least {MIN_REPLICAS} uncensored replicas")
    sel = np.isin(ensemble.snapshot_steps, steps)
    if not sel.any():
        raise InvalidParameterError(f"no snapshot at steps {steps}")
    return ensemble.snapshots[~ensemble.censored][:, sel]


def estimate_sup_moment(ensemble, p, steps=None, resamples=1000, seed=0):
    """``max_{t, x} mean_replicas |u(t, x)|^p`` over the snapshots at ``steps``.

    ``steps=None`` uses the last snapshot.  The percentile-bootstrap interval
    resamples replicas.
    """
    steps = [ensemble.snapshot_steps[-1]] if steps is None else np.atleast_1d(steps)
    x = np.abs(_samples(ensemble, steps)) ** p
    est, lo, hi, se = bootstrap(lambda s: float(np.max(s.mean(axis=0))), x, resamples, seed)
    return MomentEstimate(est, lo, hi, se, x.shape[0])


def estimate_pooled_moment(ensemble, p, steps=None, resamples=1000, seed=0):
    """Spatially pooled ``mean_{replicas, x} |u(t, x)|^p`` with a replica bootstrap.

    For spatially homogeneous fields this has no max-of-noise bias, which is
    what a comparison against a pointwise oracle needs.
    """
    steps = [ensemble.snapshot_steps[-1]] if steps is None else np.atleast_1d(steps)
    x = (np.abs(_samples(ensemble, steps)) ** p).mean(axis=(1, 2))
    est, lo, hi, se = bootstrap(np.mean, x, resamples, seed)
    return MomentEstimate(est, lo, hi, se, x.shape[0])


def estimate_holder_quotient(ensemble, p, beta, space_offsets=(), time_offsets=(), step=None):
    """Empirical ``L^p`` increment norms divided by ``offset^beta`` (space) or ``gap^(beta/2)`` (time).

    Space offsets are in grid cells, measured at snapshot ``step`` (default
    the last one) and maximised over ``x``.  Time offsets are in steps,
    ending at ``step``, and both ends must be snapshots.  Offsets below four
    cells or four steps are rejected.

    Returns ``{"space": {offset: q}, "time": {offset: q}, "max": q_max}``.
    """
    grid = ensemble.grid
    step = int(ensemble.snapshot_steps[-1]) if step is None else int(step)
    ok = ~ensemble.censored
    snaps = ensemble.snapshots[ok]
    idx = {int(s): i for i, s in enumerate(ensemble.snapshot_steps)}
    if step not in idx:
        raise InvalidParameterError(f"step {step} is not a snapshot")
    u = snaps[:, idx[step]]
    out = {"space": {}, "time": {}}
    for h in space_offsets:
        h = int(h)
        if h < 4 or h > grid.n // 2:
            raise InvalidParameterError(f"space offset {h} outside [4, n/2] cells")
        d = np.roll(u, -h, axis=1) - u
        norm = np.max(np.mean(np.abs(d) ** p, axis=0)) ** (1.0 / p)
        out["space"][h] = float(norm / (h * grid.dx) ** beta)
    for g in time_offsets:
        g = int(g)
        if g < 4:
            raise InvalidParameterError(f"time offset {g} below 4 steps")
        if step - g not in idx:
            raise InvalidParameterError(f"step {step - g} is not a snapshot")
        d = u - snaps[:, idx[step - g]]
        norm = np.max(np.mean(np.abs(d) ** p, axis=0)) ** (1.0 / p)
        out["time"][g] = float(norm / (g * grid.dt) ** (beta / 2))
    vals = list(out["space"].values()) + list(out["time"].values())
    out["max"] = max(vals) if vals else 0.0
    return out


# -- tail exponent --------------------------------------------------------


@dataclass(frozen=True)
class TailBoundParams:
    """Parameters of the tail exponent; ``eta=None`` picks the middle of its window."""

    p: float
    beta: float
    A1: float
    A2: float
    eta: Optional[float] = None
    C: float = 1.0
    T: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        lo, hi = max(self.A1, 4.0 * self.A2), 1.0 - 2.0 / self.p
        if lo >= hi:
            raise InvalidParameterError(
                f"empty eta window: A1 v 4A2 = {lo:.4g} >= 1 - 2/p = {hi:.4g}; lambda cannot be positive")
        if self.eta is None:
            object.__setattr__(self, "eta", 0.5 * (lo + hi))
        if not lo < self.eta < hi:
            raise InvalidParameterError(f"eta must lie in ({lo:.4g}, {hi:.4g}), got {self.eta}")
        if not 0.0 < self.beta < min(0.5, self.gamma):
            raise InvalidParameterError(f"beta must lie in (0, {min(0.5, self.gamma)}), got {self.beta}")
        if not (self.C > 0 and self.T > 0):
            raise InvalidParameterError("C and T must be positive")

    @property
    def lam(self):
        return self.eta - max(self.A1, 4.0 * self.A2)


def tail_exponent(params, m, H_of_m=None):
    """Exponent of the bound on ``P{T_m <= T}`` at ``m`` (scalar or array).

    ``H_of_m(m)`` supplies the ``C (m^A1 + p^2 m^(4 A2))`` term in front of
    ``T/m``; by default that expression itself.
    """
    P = params
    m = np.asarray(m, dtype=float)
    p, beta, C, T = P.p, P.beta, P.C, P.T
    log2 = math.log(2.0)
    lm = np.log(m)
    branch = np.maximum(P.A1 * lm, math.log(p * p) + 4.0 * P.A2 * lm)
    H = C * (m ** P.A1 + p * p * m ** (4.0 * P.A2)) if H_of_m is None else H_of_m(m)
    out = ((2.0 * m + 1.0) * log2 - 0.5 * np.log(math.pi * m) + m * p * math.log(C)
           + (m * p * beta / 2.0) * ((1.0 + P.A1 + 4.0 * P.A2) * log2 + 2.0 * math.log(C) + branch)
           + H * T / m
           + (beta * P.eta * p * m / 2.0) * math.log(T) - (beta * P.eta * p * m / 2.0) * lm)
    return out


def dominating_term(params, m):
    m = np.asarray(m, dtype=float)
    return -(params.beta * params.lam * params.p * m / 4.0) * np.log(m)


def m_star(params, ms):
    """Smallest tabulated ``m*`` with ``exponent <= dominating term`` for every tabulated ``m >= m*``.

    Returns ``None`` if the inequality fails at the last tabulated ``m``.
    """
    ms = np.asarray(ms, dtype=float)
    ok = tail_exponent(params, ms) <= dominating_term(params, ms)
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return float(ms[0] if bad.size == 0 else ms[bad[-1] + 1])


def tail_table(params, ms):
    """Rows ``(m, exponent, dominating_term, m_star_flag)``; the flag marks ``m >= m*``."""
    ms = np.asarray(ms, dtype=float)
    ms_star = m_star(params, ms)
    ex = tail_exponent(params, ms)
    dom = dominating_term(params, ms)
    flag = np.zeros(len(ms), dtype=int) if ms_star is None else (ms >= ms_star).astype(int)
    return list(zip(ms.tolist(), ex.tolist(), dom.tolist(), flag.tolist()))


def stirling_check(m):
    """``(binom(2m, m), 2^(2m+1)/sqrt(pi m))``."""
    return math.comb(2 * m, m), 2.0 ** (2 * m + 1) / math.sqrt(math.pi * m)


# -- reports --------------------------------------------------------------


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def digest(obj):
    """Short SHA-256 digest of a JSON-serialisable object."""
    text = json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class VerificationReport:
    """Outcome of one claim.  ``passed`` is the claim's predicate at its tolerance."""

    claim: str
    estimate: object
    ci: Optional[tuple]
    ci_method: str
    bound: object
    passed: bool
    replicas: int = 0
    inputs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self):
        """JSON-ready dict.  Wall-clock runtime is left out so reruns are byte-identical."""
        d = asdict(self)
        d.pop("runtime")
        d["inputs_digest"] = digest(self.inputs)
        return _clean(d)

    def row(self):
        ci = "" if self.ci is None else f"[{self.ci[0]:.4g}, {self.ci[1]:.4g}]"
        return (f"{self.claim:<32} {'PASS' if self.passed else 'FAIL':<5} {_fmt(self.estimate):>14} {ci:>24} "
                f"{_fmt(self.bound):>14}")


def _fmt(v):
    if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt(x)}" for k, x in v.items())
    return str(v)


def text_table(reports):
    head = f"{'claim':<32} {'':<5} {'estimate':>14} {'ci':>24} {'bound':>14}"
    return "\n".join([head, "-" * len(head)] + [r.row() for r in reports]) + "\n"


def comparison_check(first, second, tol=TOL_COMPARISON, claim="comparison"):
    """``max(u1 - u2)`` over stored snapshots; passes iff ``<= tol``.

    Accepts two paths or two ensembles (replica ``i`` paired with ``i``).
    """
    d = first.snapshots - second.snapshots
    worst = float(np.max(d)) if d.size else 0.0
    replicas = len(first) if hasattr(first, "replicas") else 1
    details = {}
    if hasattr(first, "replicas"):
        per = d.reshape(len(first), -1).max(axis=1)
        details["replicas_violating"] = int(np.sum(per > tol))
    return VerificationReport(claim, worst, None, "none", tol, worst <= tol, replicas,
                              {"tol": tol}, details)


def positivity_ladder(base_coef, u0, epsilons, grid, master_seed, replicas, threshold=0.5,
                      snapshot_stride=None, level=0.95, runner=None):
    """Exceedance ``P{tau_eps <= T}`` along an eps ladder, all levels on the same noise.

    Passes iff each level's Wilson interval reaches down to the next coarser
    level's (``lo_j <= hi_{j-1}``, i.e. no significant increase) and the
    finest estimate is at most ``threshold``.  Returns the report and the
    ensembles keyed by level.
    """
    runner = runner or simulate_ensemble
    eps = sorted(epsilons, reverse=True)
    rows = []
    ensembles = {}
    for e in eps:
        ens = runner(regularize_eps(base_coef, e), u0, grid, master_seed, replicas, snapshot_stride or grid.steps)
        ensembles[e] = ens
        ph, lo, hi, hits, trials = scan_exceedance(ens, e, level)
        rows.append({"epsilon": e, "p_hat": ph, "ci_lo": lo, "ci_hi": hi, "hits": hits, "trials": trials})
    monotone = all(rows[j]["ci_lo"] <= rows[j - 1]["ci_hi"] for j in range(1, len(rows)))
    finest = rows[-1]["p_hat"]
    passed = monotone and finest <= threshold
    report = VerificationReport(
        "positivity_ladder", [r["p_hat"] for r in rows], (rows[-1]["ci_lo"], rows[-1]["ci_hi"]), "wilson",
        threshold, passed, rows[-1]["trials"],
        {"epsilons": eps, "T": grid.t_end, "n": grid.n, "dt": grid.dt, "seed": master_seed},
        {"levels": rows, "monotone": monotone})
    return report, ensembles


def limit_consistency(base_coef, alphas, u0, grid, master_seed, replicas, tol=TOL_COMPARISON,
                      snapshot_stride=None, moment_spread=1.5, runner=None):
    """Order, Cauchy gaps and moment uniformity along an alpha ladder under shared noise.

    For ``theta = -1`` the paths must be pointwise non-increasing in alpha
    (``theta = +1``: non-decreasing) up to ``tol``; the sup-gaps between
    successive members must strictly decrease; the sup fourth moments over
    the ladder must be finite with ``max/min <= moment_spread``.
    """
    alphas = sorted(alphas)
    coefs = [interpolate_alpha(base_coef, a) for a in alphas]
    theta = coefs[0].theta
    stride = snapshot_stride or max(1, grid.steps // 10)
    runner = runner or simulate_ensemble
    ens = [runner(c, u0, grid, master_seed, replicas, stride) for c in coefs]
    violation = 0.0
    gaps = []
    for a, b in zip(ens, ens[1:]):
        d = b.snapshots - a.snapshots if theta < 0 else a.snapshots - b.snapshots
        violation = max(violation, float(np.max(d)))
        gaps.append(float(np.max(np.abs(b.snapshots - a.snapshots))))
    ordered = violation <= tol
    shrinking = all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    moments = [estimate_sup_moment(e, 4, steps=e.snapshot_steps).estimate for e in ens]
    finite = all(math.isfinite(m) for m in moments)
    uniform = finite and max(moments) <= moment_spread * min(moments)
    return VerificationReport(
        "limit_consistency", gaps, None, "none", tol, ordered and shrinking and uniform, len(ens[0]),
        {"alphas": alphas, "T": grid.t_end, "n": grid.n, "dt": grid.dt, "seed": master_seed},
        {"order_violation": violation, "ordered": ordered, "gaps_decreasing": shrinking,
         "fourth_moments": moments, "moments_uniform": uniform})
