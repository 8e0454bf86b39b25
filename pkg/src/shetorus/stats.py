"""Interval estimates shared by the localization and verification layers."""

import math

import numpy as np
from scipy.stats import norm

from .exceptions import InvalidParameterError


def wilson_interval(successes, trials, level=0.95):
    """Wilson score interval for a binomial proportion.

    Returns ``(p_hat, lo, hi)``.  ``trials == 0`` gives ``(nan, 0, 1)``.
    """
    if trials < 0 or successes < 0 or successes > trials:
        raise InvalidParameterError(f"invalid counts {successes}/{trials}")
    if trials == 0:
        return math.nan, 0.0, 1.0
    z = float(norm.ppf(0.5 + level / 2.0))
    p = successes / trials
    den = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / den
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / den
    return p, max(0.0, centre - half), min(1.0, centre + half)


def bootstrap(statistic, samples, resamples=1000, seed=0, level=0.95):
    """Percentile bootstrap over the first axis of ``samples``.

    Returns ``(estimate, lo, hi, standard_error)``.  Resample indices come
    from a generator seeded with ``seed``, so the interval is reproducible.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    est = float(statistic(samples))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    boot = np.array([statistic(samples[i]) for i in idx])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(boot, [alpha, 1.0 - alpha])
    return est, float(lo), float(hi), float(np.std(boot, ddof=1))
