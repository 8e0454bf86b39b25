"""Drift and diffusion coefficients with near-zero logarithmic blowup.

A :class:`CoefficientSpec` describes a pair ``(b, sigma)``.  On ``(0, delta]``
the built-in kinds are

* ``power_log``:      ``b(z) = sign * z * log(1/z)**A1``
* ``power_log_sin``:  ``b(z) = z * log(1/z)**A1 * sin(1/z)``
* ``custom_table``:   monotone cubic interpolation of user samples
* ``none``:           zero

and ``sigma(z) = z * log(1/z)**A2`` (kind ``power_log``) or zero.  Above
``delta`` each function continues linearly through the origin with slope
``f(delta)/delta``; the superlinear tails add ``z * ((1 + log z)**q - 1)``
for ``z > 1`` (``q = 1`` for the drift, ``q = 1/4`` for the diffusion).
Negative arguments, which only appear as transient scheme undershoots, use
the odd extension.  Every function may additionally be scaled and shifted
by an affine term ``slope * z + const``.

:class:`RegularizedCoefficient` applies one of three modifications on top of
any coefficient (``eps`` linearisation below a level, ``alpha`` interpolation
of a critical drift, ``truncate`` at a level ``M``), and
:class:`RescaledCoefficient` implements ``f_s(u) = s f(u / s)``.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import EstimationError, HypothesisError, InvalidParameterError, PreconditionError

B_KINDS = ("power_log", "power_log_sin", "custom_table", "none")
SIGMA_KINDS = ("power_log", "none")
TAILS = ("lipschitz_linear", "log_superlinear", "log_quarter_superlinear")

# floor used in place of 0 inside log(1/z)
_TINY = 1e-300


def _superlinear_increment(a, q):
    # z ((1 + log z)^q - 1) for z > 1, zero below; Lipschitz on bounded sets
    lz = np.log(np.maximum(a, 1.0))
    return a * ((1.0 + lz) ** q - 1.0)


def _superlinear_increment_derivative(a, q):
    lz = 1.0 + np.log(np.maximum(a, 1.0))
    return np.where(a > 1.0, lz ** q - 1.0 + q * lz ** (q - 1.0), 0.0)


def _as_float_array(z):
    z = np.asarray(z, dtype=float)
    if np.isnan(z).any():
        raise InvalidParameterError("NaN argument")
    return z


@dataclass(frozen=True)
class CoefficientSpec:
    """Drift/diffusion pair with prescribed behaviour near zero.

    ``kind``, ``A1`` and ``sign`` describe the drift; ``sigma_kind`` and
    ``A2`` the diffusion.  ``delta`` is the threshold below which the
    near-zero formulas apply.  ``table`` holds ``(z_samples, b_samples)`` for
    the ``custom_table`` kind.
    """

    kind: str = "power_log"
    A1: float = 0.5
    sign: int = -1
    sigma_kind: str = "power_log"
    A2: float = 0.2
    delta: float = 0.5
    tail: str = "lipschitz_linear"
    b_scale: float = 1.0
    sigma_scale: float = 1.0
    b_slope: float = 0.0
    sigma_slope: float = 0.0
    b_const: float = 0.0
    sigma_const: float = 0.0
    table: Optional[tuple] = None
    unsafe_hypotheses: bool = False
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in B_KINDS:
            raise InvalidParameterError(f"unknown drift kind {self.kind!r}; expected one of {B_KINDS}")
        if self.sigma_kind not in SIGMA_KINDS:
            raise InvalidParameterError(f"unknown sigma kind {self.sigma_kind!r}; expected one of {SIGMA_KINDS}")
        if self.tail not in TAILS:
            raise InvalidParameterError(f"unknown tail {self.tail!r}; expected one of {TAILS}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.A1 <= 1.0:
            raise InvalidParameterError(f"A1 must lie in (0, 1], got {self.A1}")
        if self.unsafe_hypotheses:
            if self.A2 <= 0.0:
                raise InvalidParameterError(f"A2 must be positive, got {self.A2}")
        elif not 0.0 < self.A2 < 0.25:
            raise InvalidParameterError(
                f"A2 must lie in (0, 1/4), got {self.A2} (set unsafe_hypotheses to go beyond)")
        if self.sign not in (-1, 1):
            raise InvalidParameterError(f"sign must be +1 or -1, got {self.sign}")
        for name in ("b_scale", "sigma_scale", "b_slope", "sigma_slope", "b_const", "sigma_const"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.kind == "custom_table":
            if self.table is None:
                raise InvalidParameterError("custom_table kind needs a (z, b) table")
            zs, bs = (np.asarray(v, dtype=float) for v in self.table)
            if zs.shape != bs.shape or zs.ndim != 1 or zs.size < 2:
                raise InvalidParameterError("table must be two equal-length 1-d sequences")
            if np.any(np.diff(zs) <= 0) or zs[0] < 0:
                raise InvalidParameterError("table abscissae must be increasing and non-negative")
            if zs[0] > 0:
                zs, bs = np.concatenate([[0.0], zs]), np.concatenate([[0.0], bs])
            if zs[-1] < self.delta:
                raise InvalidParameterError("table must cover [0, delta]")
            object.__setattr__(self, "table", (tuple(zs), tuple(bs)))
            object.__setattr__(self, "_interp", PchipInterpolator(zs, bs, extrapolate=False))
        if self.A1 == 1.0:
            if self.kind == "power_log_sin":
                raise HypothesisError("A1 = 1 requires a drift that does not change sign")
            check_critical(self)

    # -- evaluation -----------------------------------------------------

    def _drift_near(self, a):
        # a in (0, delta]
        L = -np.log(a)
        if self.kind == "power_log":
            return self.sign * a * L ** self.A1
        if self.kind == "power_log_sin":
            return a * L ** self.A1 * np.sin(1.0 / a)
        if self.kind == "custom_table":
            return self._interp(a)
        return np.zeros_like(a)

    def _sigma_near(self, a):
        if self.sigma_kind == "power_log":
            return a * (-np.log(a)) ** self.A2
        return np.zeros_like(a)

    def _kind_part(self, z, near, q):
        a = np.abs(z)
        d = self.delta
        ac = np.clip(a, _TINY, d)
        inner = near(ac)
        inner = np.where(a > 0, inner, 0.0)
        at_delta = float(near(np.array([d]))[0])
        outer = at_delta / d * a
        if q is not None:
            outer = outer + _superlinear_increment(a, q)
        out = np.where(a <= d, inner, outer)
        return np.where(z < 0, -out, out)

    def b(self, z):
        """Drift evaluated elementwise."""
        z = _as_float_array(z)
        q = 1.0 if self.tail in ("log_superlinear", "log_quarter_superlinear") else None
        with np.errstate(over="ignore", invalid="ignore"):
            part = self._kind_part(z, self._drift_near, q)
        return self.b_scale * part + self.b_slope * z + self.b_const

    def sigma(self, z):
        """Diffusion coefficient evaluated elementwise."""
        z = _as_float_array(z)
        q = 0.25 if self.tail == "log_quarter_superlinear" else None
        with np.errstate(over="ignore", invalid="ignore"):
            part = self._kind_part(z, self._sigma_near, q)
        return self.sigma_scale * part + self.sigma_slope * z + self.sigma_const

    def evaluate(self, which, z):
        return self.b(z) if which == "b" else self.sigma(z)

    def _drift_near_derivative(self, a):
        L = -np.log(a)
        A = self.A1
        if self.kind == "power_log":
            return self.sign * (L ** A - A * L ** (A - 1.0))
        if self.kind == "power_log_sin":
            return (L ** A - A * L ** (A - 1.0)) * np.sin(1.0 / a) - L ** A * np.cos(1.0 / a) / a
        if self.kind == "custom_table":
            return self._interp.derivative()(a)
        return np.zeros_like(a)

    def _sigma_near_derivative(self, a):
        if self.sigma_kind == "power_log":
            L = -np.log(a)
            return L ** self.A2 - self.A2 * L ** (self.A2 - 1.0)
        return np.zeros_like(a)

    def derivative(self, which, z):
        """Exact derivative (one-sided from the right at the knots); infinite at 0 for blowup kinds."""
        z = _as_float_array(z)
        a = np.abs(z)
        d = self.delta
        if which == "b":
            near, dnear, scale, slope = self._drift_near, self._drift_near_derivative, self.b_scale, self.b_slope
            q = 1.0 if self.superlinear("b") else None
        else:
            near, dnear, scale, slope = self._sigma_near, self._sigma_near_derivative, self.sigma_scale, self.sigma_slope
            q = 0.25 if self.superlinear("sigma") else None
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inner = dnear(np.clip(a, _TINY, d))
            inner = np.where(a > 0, inner, np.inf if self.blows_up_at_zero(which) else inner)
            outer = float(near(np.array([d]))[0]) / d + np.zeros_like(a)
            if q is not None:
                outer = outer + _superlinear_increment_derivative(a, q)
        part = np.where(a < d, inner, outer)
        return scale * part + slope

    # -- structure used by the estimators --------------------------------

    @property
    def spec(self):
        return self

    @property
    def knots(self):
        k = [self.delta]
        if self.tail != "lipschitz_linear":
            k.append(1.0)
        return tuple(k)

    def blows_up_at_zero(self, which):
        if which == "b":
            return self.kind in ("power_log", "power_log_sin") and self.b_scale != 0
        return self.sigma_kind == "power_log" and self.sigma_scale != 0

    def superlinear(self, which):
        if which == "b":
            return self.tail != "lipschitz_linear"
        return self.tail == "log_quarter_superlinear"

    def exponent(self, which):
        return self.A1 if which == "b" else self.A2

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def check_critical(coef, n=4000):
    """Check the sign and ratio conditions needed for the alpha-interpolation.

    On ``(0, delta]`` the drift must keep one sign and satisfy
    ``|b(z)|/z >= |b(delta)|/delta``; this is what makes the interpolated
    drifts monotone in ``alpha``.  Checked on a geometric grid.  Returns the
    sign ``theta``.
    """
    d = coef.spec.delta
    z = d * np.geomspace(1e-12, 1.0, n)
    vals = coef.b(z)
    b_d = float(coef.b(np.array([d]))[0])
    if b_d == 0.0:
        raise HypothesisError("b(delta) = 0; the interpolation anchor degenerates", z=d)
    theta = 1 if b_d > 0 else -1
    bad = np.nonzero(theta * vals < 0)[0]
    if bad.size:
        raise HypothesisError(f"b changes sign on (0, delta]: b({z[bad[0]]:.3e}) = {vals[bad[0]]:.3e}",
                              z=float(z[bad[0]]))
    ratio = np.abs(vals) / z
    anchor = abs(b_d) / d
    bad = np.nonzero(ratio < anchor * (1.0 - 1e-12))[0]
    if bad.size:
        zb = float(z[bad[0]])
        raise HypothesisError(
            f"|b(z)|/z < |b(delta)|/delta at z = {zb:.3e} ({ratio[bad[0]]:.6g} < {anchor:.6g})", z=zb)
    return theta


MODES = ("eps", "alpha", "truncate")


@dataclass(frozen=True, eq=False)
class RegularizedCoefficient:
    """A coefficient modified by ``eps``-linearisation, ``alpha``-interpolation or truncation.

    ``level`` is ``eps``, ``alpha`` or ``M`` respectively.  Growth constants
    of both functions are computed at construction (``constants_b``,
    ``constants_sigma``); estimation failures are stored as ``None``.
    """

    base: object
    mode: str
    level: float
    theta: int = 0
    constants_b: object = field(default=None, init=False)
    constants_sigma: object = field(default=None, init=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "eps":
            lvl = np.array([self.level])
            object.__setattr__(self, "_eps_b", float(self.base.b(lvl)[0]) / self.level)
            object.__setattr__(self, "_eps_s", float(self.base.sigma(lvl)[0]) / self.level)
        elif self.mode == "alpha":
            d = self.delta
            object.__setattr__(self, "_anchor", abs(float(self.base.b(np.array([d]))[0])) / d)
        for which in ("b", "sigma"):
            try:
                c = growth_constants(self, which)
            except EstimationError:
                c = None
            object.__setattr__(self, f"constants_{which}", c)

    @property
    def spec(self):
        return self.base.spec

    @property
    def delta(self):
        return self.spec.delta

    @property
    def knots(self):
        k = set(self.base.knots)
        if self.mode in ("eps", "truncate"):
            k.add(self.level)
        return tuple(sorted(k))

    def b(self, z):
        z = _as_float_array(z)
        if self.mode == "eps":
            return np.where(z >= self.level, self.base.b(z), self._eps_b * z)
        if self.mode == "truncate":
            return self.base.b(np.minimum(z, self.level))
        return self._alpha_b(z)

    def sigma(self, z):
        z = _as_float_array(z)
        if self.mode == "eps":
            return np.where(z >= self.level, self.base.sigma(z), self._eps_s * z)
        if self.mode == "truncate":
            return self.base.sigma(np.minimum(z, self.level))
        return self.base.sigma(z)

    def derivative(self, which, z):
        z = _as_float_array(z)
        base = self.base.derivative(which, z)
        if self.mode == "eps":
            slope = self._eps_b if which == "b" else self._eps_s
            return np.where(np.abs(z) >= self.level, base, slope)
        if self.mode == "truncate":
            return np.where(z <= self.level, base, 0.0)
        if which == "sigma":
            return base
        d = self.delta
        a = np.abs(z)
        ac = np.clip(a, _TINY, d)
        al = self.level
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r = np.abs(self.base.b(ac)) / ac
            # d/dz [z r^al] = r^al + al z r^(al-1) r'
            dr = (self.theta * self.base.derivative("b", ac) - r) / ac
            inner = self.theta * self._anchor ** (1.0 - al) * (r ** al + al * r ** (al - 1.0) * ac * dr)
        inner = np.where(a > 0, inner, np.inf)
        return np.where(a < d, inner, base)

    def _alpha_b(self, z):
        d = self.delta
        a = np.abs(z)
        ac = np.clip(a, _TINY, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(self.base.b(ac)) / ac
            inner = self.theta * ac * r ** self.level * self._anchor ** (1.0 - self.level)
        inner = np.where(a > 0, inner, 0.0)
        inner = np.where(z < 0, -inner, inner)
        return np.where(a <= d, inner, self.base.b(z))

    def evaluate(self, which, z):
        return self.b(z) if which == "b" else self.sigma(z)

    def blows_up_at_zero(self, which):
        if self.mode == "eps":
            return False
        if self.mode == "alpha" and which == "b":
            return True
        return self.base.blows_up_at_zero(which)

    def superlinear(self, which):
        if self.mode == "truncate":
            return False
        return self.base.superlinear(which)

    def exponent(self, which):
        if self.mode == "alpha" and which == "b":
            return self.level
        return self.base.exponent(which)

    def eps_level(self):
        """Outermost ``eps`` level in the chain, or ``None``."""
        if self.mode == "eps":
            return self.level
        inner = getattr(self.base, "eps_level", None)
        return inner() if inner else None


@dataclass(frozen=True, eq=False)
class RescaledCoefficient:
    """``f_s(u) = s * f(u / s)`` for both functions of ``base``."""

    base: object
    factor: float

    @property
    def spec(self):
        return self.base.spec

    @property
    def delta(self):
        return self.spec.delta * self.factor

    @property
    def knots(self):
        return tuple(k * self.factor for k in self.base.knots)

    def b(self, z):
        return self.factor * self.base.b(_as_float_array(z) / self.factor)

    def derivative(self, which, z):
        return self.base.derivative(which, _as_float_array(z) / self.factor)

    def sigma(self, z):
        return self.factor * self.base.sigma(_as_float_array(z) / self.factor)

    def evaluate(self, which, z):
        return self.b(z) if which == "b" else self.sigma(z)

    def blows_up_at_zero(self, which):
        return self.base.blows_up_at_zero(which)

    def superlinear(self, which):
        return self.base.superlinear(which)

    def exponent(self, which):
        return self.base.exponent(which)

    def eps_level(self):
        inner = getattr(self.base, "eps_level", None)
        lvl = inner() if inner else None
        return None if lvl is None else lvl * self.factor


def regularize_eps(coef, eps):
    """Linearise both functions on ``(0, eps]`` through ``(eps, f(eps))``."""
    if not (math.isfinite(eps) and 0.0 < eps < coef.spec.delta):
        raise InvalidParameterError(f"eps must lie in (0, delta={coef.spec.delta}), got {eps}")
    return RegularizedCoefficient(coef, "eps", float(eps))


def interpolate_alpha(coef, alpha):
    """Geometric interpolation of a critical drift between ``b`` and its anchor slope at ``delta``.

    On ``(0, delta]``: ``theta * z * (|b(z)|/z)**alpha * (|b(delta)|/delta)**(1 - alpha)``.
    Raises :class:`HypothesisError` if the sign/ratio conditions fail.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    theta = check_critical(coef)
    return RegularizedCoefficient(coef, "alpha", float(alpha), theta=theta)


def truncate_M(coef, level):
    """Freeze both functions beyond ``level``: ``f(min(z, level))``."""
    if not (math.isfinite(level) and level > 1.0):
        raise InvalidParameterError(f"truncation level must exceed 1, got {level}")
    return RegularizedCoefficient(coef, "truncate", float(level))


def rescale(coef, factor):
    if not (math.isfinite(factor) and factor > 0):
        raise InvalidParameterError(f"rescaling factor must be positive, got {factor}")
    return RescaledCoefficient(coef, float(factor))


# -- growth constants ----------------------------------------------------


class GrowthConstants(NamedTuple):
    """Constants of one coefficient function.

    ``lipschitz`` is the Lipschitz constant on ``[delta, inf)`` (on
    ``[0, inf)`` for eps-regularised functions), ``sup_near_zero`` is
    ``sup_{[0, delta]} |f|``, ``growth`` is ``sup_{z > 0} |f(z) - f(0)|/z``
    (``inf`` when ``f`` blows up at zero) and ``log_ratio`` is
    ``lipschitz / log(1/eps)**A`` for eps-regularised functions.
    """

    lipschitz: float
    sup_near_zero: float
    growth: float
    log_ratio: Optional[float]


def _truncation_level(coef):
    level = None
    while isinstance(coef, (RegularizedCoefficient, RescaledCoefficient)):
        if isinstance(coef, RegularizedCoefficient) and coef.mode == "truncate":
            level = coef.level if level is None else min(level, coef.level)
        if isinstance(coef, RescaledCoefficient) and level is not None:
            level *= coef.factor
        coef = coef.base
    return level


def _scan_grid(lo, hi, knots, n):
    """Geometric points resolving ``lo``, uniform points on ``[lo, hi]``, and the knots."""
    parts = [np.linspace(lo, hi, n)]
    if lo > 0:
        parts.append(np.geomspace(lo, hi, n))
    else:
        parts.append(np.geomspace(1e-12 * hi, hi, n))
        parts.append([0.0])
    z = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in parts]))
    # near-coincident points only add rounding noise to the secants
    z = z[np.concatenate([[True], np.diff(z) > 1e-7 * z[1:]])]
    kn = np.array([k for k in knots if lo <= k <= hi], dtype=float)
    if kn.size:
        near = np.min(np.abs(np.subtract.outer(z, kn)), axis=1) <= 1e-7 * np.maximum(z, 1e-300)
        z = np.unique(np.concatenate([z[~near], kn]))
    return z


def _sin_envelope(spec, which, lo, hi, n):
    """Derivative envelope of the sin-modulated drift on ``[lo, hi]`` inside ``(0, delta]``."""
    z = np.geomspace(lo, hi, n)
    L = -np.log(z)
    A = spec.A1
    env = np.abs(L ** A - A * L ** (A - 1.0)) + L ** A / z
    return float(np.max(abs(spec.b_scale) * env)) + abs(spec.b_slope)


def growth_constants(coef, which="b", delta=None, rel_tol=0.01, n0=2000, max_refine=10):
    """Estimate :class:`GrowthConstants` for ``coef.b`` or ``coef.sigma``.

    Difference quotients and the exact derivative are sampled on a grid that
    is geometric near zero and uniform above ``delta``, doubled until
    successive Lipschitz estimates differ by less than ``rel_tol``.  For the sin-modulated drift the part of
    the domain inside ``(0, delta)`` is bounded through the analytic
    derivative envelope instead.
    """
    spec = coef.spec
    delta = spec.delta if delta is None else delta
    f = lambda z: coef.evaluate(which, z)  # noqa: E731
    eps = coef.eps_level() if hasattr(coef, "eps_level") else None
    trunc = _truncation_level(coef)
    if coef.superlinear(which) and trunc is None:
        raise EstimationError(f"{which} grows superlinearly and is not Lipschitz on [delta, inf)")
    knots = tuple(coef.knots) + ((eps,) if eps else ())
    hi = max(4.0, 4.0 * delta, *(2.0 * k for k in knots))
    lo = 0.0 if eps is not None else delta
    sin_part = which == "b" and spec.kind == "power_log_sin" and eps is not None

    history = []
    n = n0
    for _ in range(max_refine):
        z = _scan_grid(lo, hi, knots, n)
        fz = f(z)
        q = np.abs(np.diff(fz)) / np.diff(z)
        # secants miss the endpoint value of a monotone derivative; sample it too
        with np.errstate(invalid="ignore"):
            dz = np.abs(coef.derivative(which, z))
        if sin_part:
            inside = (z[1:] > eps) & (z[:-1] < delta)
            lip = float(np.max(q[~inside], initial=0.0))
            lip = max(lip, _sin_envelope(spec, which, eps, delta, n))
            dz = dz[(z <= eps) | (z >= delta)]
        else:
            lip = float(np.max(q))
        # secants cannot exceed sup|f'| except by rounding; if they do, the
        # derivative samples missed a peak and the secant is kept
        lip_d = float(np.max(dz, initial=0.0))
        lip = lip_d if lip <= lip_d * (1.0 + 1e-6) else lip
        history.append(lip)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= rel_tol * max(abs(history[-1]), 1e-300):
            break
        n *= 2
    else:
        raise EstimationError(f"Lipschitz estimate for {which} did not stabilise", history)

    zn = _scan_grid(0.0, delta, knots, n)
    sup0 = float(np.max(np.abs(f(zn))))
    if coef.blows_up_at_zero(which):
        growth = math.inf
    else:
        zg = _scan_grid(0.0, hi, knots, n)[1:]
        f0 = float(f(np.array([0.0]))[0])
        growth = float(np.max(np.abs(f(zg) - f0) / zg))
    log_ratio = None
    if eps is not None:
        log_ratio = lip / math.log(1.0 / eps) ** coef.exponent(which)
    return GrowthConstants(lip, sup0, growth, log_ratio)


def uniform_gap(f_n, f, z_max, knots=(), rel_tol=0.01, n0=4000, max_refine=8):
    """``sup_{[0, z_max]} |f_n - f|`` on a refining grid.

    The grid is geometric down to ``1e-40`` (to resolve discrepancies that
    live at exponentially small arguments) plus uniform points and
    ``knots``.
    """
    prev = None
    n = n0
    for _ in range(max_refine):
        z = np.unique(np.concatenate([
            [0.0], np.geomspace(1e-40, z_max, n), np.linspace(0.0, z_max, n),
            [k for k in knots if 0 <= k <= z_max],
        ]))
        gap = float(np.max(np.abs(f_n(z) - f(z))))
        if prev is not None and abs(gap - prev) <= rel_tol * max(gap, 1e-300):
            return gap
        prev = gap
        n *= 2
    raise EstimationError("uniform gap did not stabilise", [prev])


def check_ordered(lower, upper, z_max, which="b", n=4001):
    """Raise :class:`PreconditionError` unless ``lower <= upper`` on ``[0, z_max]``."""
    z = np.unique(np.concatenate([np.linspace(0.0, z_max, n), np.geomspace(1e-12, z_max, n)]))
    diff = lower.evaluate(which, z) - upper.evaluate(which, z)
    bad = np.nonzero(diff > 0)[0]
    if bad.size:
        raise PreconditionError(f"{which}1 > {which}2 at z = {z[bad[0]]:.6g}")


def same_function(c1, c2, z_max, which="sigma", n=4001):
    z = np.unique(np.concatenate([np.linspace(0.0, z_max, n), np.geomspace(1e-12, z_max, n)]))
    return bool(np.array_equal(c1.evaluate(which, z), c2.evaluate(which, z)))
