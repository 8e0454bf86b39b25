"""Heat kernel on the unit torus.

``G_t(x) = sum_k (2 pi t)^{-1/2} exp(-(x - k)^2 / (2t))`` is evaluated either
as a truncated image sum (short times) or through its Fourier dual
``1 + 2 sum_k exp(-2 pi^2 k^2 t) cos(2 pi k x)`` (long times).  In both cases
the number of retained terms is derived from ``t`` and the requested
absolute tolerance, with a geometric bound on the discarded tail.
"""

import math

import numpy as np

from .exceptions import InvalidParameterError, PreconditionError

# Above this time the Fourier series needs fewer terms than the image sum.
FOURIER_SWITCH = 1.0 / (2.0 * math.pi)

DEFAULT_TOL = 1e-13


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return float(value)


def torus_distance(x, y=0.0):
    """Distance on the unit torus, in ``[0, 1/2]``."""
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def image_tail_bound(t, K):
    """Upper bound on the image terms with ``|k| > K`` for any ``x`` in ``[0, 1/2]``."""
    a = K + 0.5
    pref = 1.0 / math.sqrt(2.0 * math.pi * t)
    return 2.0 * pref * math.exp(-a * a / (2.0 * t)) / -math.expm1(-a / t)


def fourier_tail_bound(t, K):
    """Upper bound on ``2 sum_{k > K} exp(-2 pi^2 k^2 t)``."""
    c = 2.0 * math.pi ** 2 * t
    return 2.0 * math.exp(-c * (K + 1) ** 2) / -math.expm1(-c * (2 * K + 3))


def image_cutoff(t, tol):
    """Smallest image index ``K`` whose tail bound is below ``tol``."""
    t = _check_positive("t", t)
    tol = _check_positive("tol", tol)
    pref = 1.0 / math.sqrt(2.0 * math.pi * t)
    K = max(0, math.ceil(math.sqrt(2.0 * t * max(math.log(2.0 * pref / tol), 0.0)) - 0.5))
    while image_tail_bound(t, K) >= tol:
        K += 1
    return K


def fourier_cutoff(t, tol):
    t = _check_positive("t", t)
    tol = _check_positive("tol", tol)
    K = max(0, math.ceil(math.sqrt(max(math.log(2.0 / tol), 0.0) / (2.0 * math.pi ** 2 * t))) - 1)
    while fourier_tail_bound(t, K) >= tol:
        K += 1
    return K


def heat_kernel(t, x, tol=DEFAULT_TOL):
    """Torus heat kernel ``G_t(x)`` with absolute truncation error below ``tol``.

    Parameters
    ----------
    t : float
        Time, strictly positive.
    x : float or array_like
        Torus coordinate(s); values outside ``[0, 1)`` are wrapped.
    tol : float
        Absolute bound on the omitted part of the series.

    Returns
    -------
    float or ndarray
        Same shape as ``x``.
    """
    t = _check_positive("t", t)
    tol = _check_positive("tol", tol)
    scalar = np.ndim(x) == 0
    d = torus_distance(x)
    if t >= FOURIER_SWITCH:
        K = fourier_cutoff(t, tol)
        k = np.arange(K, 0, -1, dtype=float)
        terms = np.exp(-2.0 * math.pi ** 2 * k ** 2 * t) * np.cos(2.0 * math.pi * np.multiply.outer(d, k))
        out = 1.0 + 2.0 * terms.sum(axis=-1)
    else:
        K = image_cutoff(t, tol)
        # smallest terms first
        k = np.concatenate([np.arange(-K, 0), np.arange(K, 0, -1), [0]]).astype(float)
        diff = np.subtract.outer(d, k)
        out = np.exp(-diff ** 2 / (2.0 * t)).sum(axis=-1) / math.sqrt(2.0 * math.pi * t)
    out = np.maximum(out, 0.0)
    return float(out) if scalar else out


def real_line_kernel(t, x):
    """Gaussian density ``p_t(x)`` on the real line."""
    t = _check_positive("t", t)
    x = np.asarray(x, dtype=float)
    return np.exp(-x ** 2 / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


# largest t at which 2 (1 + sqrt(t / 2 pi)) still dominates, found numerically (0.9365...)
DOMINATION_T_MAX = 0.93


def real_line_domination_factor(t):
    """Factor ``c`` with ``G_t(x) <= c p_t(x)`` for ``|x| <= 1/2``.

    ``2 (1 + sqrt(t / 2 pi))`` up to :data:`DOMINATION_T_MAX`.  Beyond it
    that factor is too small (``G_t(0) -> 1`` while ``p_t(0) -> 0``) and the
    image-sum bound ``3 + sqrt(2 pi t)`` is used.
    """
    t = _check_positive("t", t)
    if t <= DOMINATION_T_MAX:
        return 2.0 * (1.0 + math.sqrt(t / (2.0 * math.pi)))
    return 3.0 + math.sqrt(2.0 * math.pi * t)


def _quadrature_points(t, tol, decay, n_min=64):
    """Power-of-two point count whose periodic-trapezoid aliasing error is below ``tol``.

    ``decay`` is the Gaussian rate of the integrand's Fourier coefficients
    (``c_m <= A exp(-decay m^2)``).
    """
    n = n_min
    while 2.0 * math.exp(-decay * n * n) / -math.expm1(-decay * n * n) >= tol:
        n *= 2
    return n


def kernel_mass(t, tol=DEFAULT_TOL, n=None):
    """Periodic trapezoid quadrature of ``G_t`` over one period.

    Returns ``(mass, error_bound)`` where the bound covers both aliasing
    and the series truncation of each sample.
    """
    t = _check_positive("t", t)
    decay = 2.0 * math.pi ** 2 * t
    if n is None:
        n = _quadrature_points(t, tol, decay)
    x = np.arange(n) / n
    mass = float(np.mean(heat_kernel(t, x, tol)))
    alias = 2.0 * math.exp(-decay * n * n) / -math.expm1(-decay * n * n)
    return mass, alias + tol


def l2_mass_bound(t):
    """Upper bound ``1 + sqrt(2 pi / t)`` on ``G_{2t}(0)``."""
    t = _check_positive("t", t)
    return 1.0 + math.sqrt(2.0 * math.pi) / math.sqrt(t)


def kernel_l2_identity(t, tol=DEFAULT_TOL):
    """Both sides of ``int_0^1 G_t(x - y)^2 dy = G_{2t}(0)``.

    The left side is a periodic trapezoid sum; the right side is a direct
    kernel evaluation.  Returns ``(lhs, rhs)``.
    """
    t = _check_positive("t", t)
    # Fourier coefficients of G_t^2 decay like exp(-pi^2 m^2 t) times a theta factor
    theta = 2.0 + 1.0 / math.sqrt(4.0 * math.pi * t)
    n = _quadrature_points(t, tol / theta, math.pi ** 2 * t)
    x = np.arange(n) / n
    g = heat_kernel(t, x, tol)
    lhs = float(np.mean(g * g))
    rhs = heat_kernel(2.0 * t, 0.0, tol)
    return lhs, rhs


def kernel_increment_check(t, t2, x, y, beta, tol=DEFAULT_TOL):
    """Normalised kernel increments in time and space.

    ``ratio_time = |G_t(x) - G_t2(x)| / (t^{-beta/2} G_{2 t2}(x) (t2 - t)^{beta/2})``
    and ``ratio_space = |G_t(x) - G_t(y)| / (t^{-beta/2} (G_{2t}(x) + G_{2t}(y)) |x - y|^beta)``
    with ``|x - y|`` the torus distance.  Degenerate increments give 0.
    """
    t = _check_positive("t", t)
    t2 = _check_positive("t'", t2)
    if t2 < t:
        raise PreconditionError("need t <= t'")
    if not 0.0 < beta <= 1.0:
        raise InvalidParameterError(f"beta must lie in (0, 1], got {beta}")
    g_t_x = heat_kernel(t, x, tol)
    if t2 == t:
        ratio_time = 0.0
    else:
        den = t ** (-beta / 2) * heat_kernel(2.0 * t2, x, tol) * (t2 - t) ** (beta / 2)
        ratio_time = abs(g_t_x - heat_kernel(t2, x, tol)) / den
    dist = float(torus_distance(x, y))
    if dist == 0.0:
        ratio_space = 0.0
    else:
        den = t ** (-beta / 2) * (heat_kernel(2.0 * t, x, tol) + heat_kernel(2.0 * t, y, tol)) * dist ** beta
        ratio_space = abs(g_t_x - heat_kernel(t, y, tol)) / den
    return float(ratio_time), float(ratio_space)


def increment_constant_sweep(times, betas, n_points=33, lags=(1.25, 2.0, 4.0, 16.0), tol=DEFAULT_TOL):
    """Largest increment ratios over a sweep; an empirical constant for the increment bound.

    Space pairs are ``(0, y)`` with ``y`` on an ``n_points`` grid of
    ``[0, 1/2]``; time pairs use ``t' = lag * t`` at the same ``x`` grid.
    Returns a dict ``beta -> (max_ratio_time, max_ratio_space)``.
    """
    xs = np.linspace(0.0, 0.5, n_points)
    out = {}
    for beta in betas:
        rt = rs = 0.0
        for t in times:
            g_t = heat_kernel(t, xs, tol)
            g_2t = heat_kernel(2.0 * t, xs, tol)
            # space: base point 0 against every y
            dist = xs[1:]
            num = np.abs(g_t[0] - g_t[1:])
            den = t ** (-beta / 2) * (g_2t[0] + g_2t[1:]) * dist ** beta
            rs = max(rs, float(np.max(num / den)))
            for lag in lags:
                t2 = lag * t
                num = np.abs(g_t - heat_kernel(t2, xs, tol))
                den = t ** (-beta / 2) * heat_kernel(2.0 * t2, xs, tol) * (t2 - t) ** (beta / 2)
                rt = max(rt, float(np.max(num / den)))
        out[beta] = (rt, rs)
    return out


def heat_multipliers(n, t):
    """Fourier multipliers ``exp(-2 pi^2 k^2 t)`` for the ``rfft`` modes of an ``n``-grid."""
    k = np.arange(n // 2 + 1, dtype=float)
    return np.exp(-2.0 * math.pi ** 2 * k ** 2 * t)


def convolve_initial(u0, t, grid=None):
    """Apply the heat semigroup for time ``t`` to a periodic grid function.

    The circular convolution is diagonalised by the FFT; the zero mode is
    untouched, so the discrete mean is preserved.  ``t == 0`` returns a copy.
    """
    u0 = np.asarray(u0, dtype=float)
    if grid is not None and u0.shape[-1] != grid.n:
        raise PreconditionError(f"field has {u0.shape[-1]} points, grid has {grid.n}")
    if not (math.isfinite(t) and t >= 0):
        raise InvalidParameterError(f"t must be finite and >= 0, got {t!r}")
    if t == 0:
        return u0.copy()
    n = u0.shape[-1]
    return np.fft.irfft(np.fft.rfft(u0, axis=-1) * heat_multipliers(n, t), n=n, axis=-1)
