"""Canonical experiment configurations, one per suite family.

The TOML files under ``configs/`` are serialisations of these dicts.
"""

import math

from .config import ExperimentConfig

_GRID = {"n": 128, "dt": 1e-5, "T_end": 0.05, "snapshot_stride": 1000}

# b(z) = -z (log 1/z)^0.5, sigma(z) = z (log 1/z)^0.2
_SUBCRT_COEF = {"kind": "power_log", "A1": 0.5, "sign": -1, "sigma_kind": "power_log", "A2": 0.2, "delta": 0.5}

PRESETS = {
    "kernel": {
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 1},
        "run": {"suite": "kernel", "out": "out/kernel", "workers": 1},
        "params": {"kernel_points": 12},
    },
    "subcrt": {
        "coefficients": dict(_SUBCRT_COEF),
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 500},
        "initial": {"value": 1.0},
        "run": {"suite": "positivity", "out": "out/subcrt", "workers": 1},
        "params": {"ladder_base": math.e, "epsilon_exponents": [2, 4, 6], "threshold": 0.5,
                   "glue_exponents": [1, 2, 3], "glue_replicas": 50, "moment_p": [2, 4],
                   "holder_betas": [0.1, 0.2, 0.4], "holder_space_offsets": [4, 8, 16, 32],
                   "holder_time_offsets": [16, 32, 64, 128], "holder_pilot_replicas": 50,
                   "holder_replicas": 200},
    },
    "weakcomp": {
        "coefficients": dict(_SUBCRT_COEF),
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 100},
        "initial": {"value": 1.0},
        "run": {"suite": "comparison", "out": "out/weakcomp", "workers": 1},
        "params": {"epsilon_exponents": [6], "drift_gap": 0.5, "initial_shift": 0.1},
    },
    "critical": {
        # b(z) = -z log(1/z) below delta = 1/e
        "coefficients": {"kind": "power_log", "A1": 1.0, "sign": -1, "sigma_kind": "power_log", "A2": 0.2,
                         "delta": math.exp(-1.0)},
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 50},
        "initial": {"value": 0.25},
        "run": {"suite": "critical", "out": "out/critical", "workers": 1},
        "params": {"alphas": [0.9, 0.99, 0.999]},
    },
    "superlinear": {
        "coefficients": {"kind": "power_log", "A1": 0.5, "sign": -1, "sigma_kind": "power_log", "A2": 0.2,
                         "delta": 0.5, "tail": "log_quarter_superlinear"},
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 300},
        "initial": {"value": 20.0},
        "run": {"suite": "superlinear", "out": "out/superlinear", "workers": 1},
        "params": {"M_exponents": [3, 4, 5], "chebyshev_p": 4},
    },
    "tail": {
        "grid": dict(_GRID),
        "noise": {"master_seed": 20240101, "replicas": 1},
        "run": {"suite": "tail", "out": "out/tail", "workers": 1},
        "params": {"tail_A1": [0.3, 0.6, 0.9], "tail_A2": [0.05, 0.15, 0.24], "tail_p": 8, "tail_beta": 0.2,
                   "tail_C": 1.0, "tail_T": 1.0, "tail_m_max": 10_000},
    },
}

SUITE_PRESET = {
    "kernel": "kernel", "moments": "subcrt", "holder": "subcrt", "positivity": "subcrt",
    "comparison": "weakcomp", "critical": "critical", "superlinear": "superlinear", "tail": "tail",
}


def preset(name):
    """Fresh :class:`ExperimentConfig` for a preset name."""
    return ExperimentConfig.from_dict(PRESETS[name])


def default_config(suite):
    """Canonical config for a suite, with ``run.suite`` set to it."""
    return preset(SUITE_PRESET[suite]).with_overrides(suite=suite)
