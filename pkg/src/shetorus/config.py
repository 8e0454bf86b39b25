"""Experiment configuration files (TOML).

Sections and keys::

    [coefficients]  kind A1 A2 delta sign sigma_kind tail mode eps alpha M
                    b_scale sigma_scale b_slope sigma_slope b_const sigma_const
                    unsafe_hypotheses table_z table_b
    [grid]          n dt T_end snapshot_stride
    [noise]         master_seed replicas
    [initial]       value cos_amplitude
    [run]           suite out workers
    [tolerances]    comparison kernel_mass kernel_l2 semigroup
    [params]        suite-specific knobs, see PARAM_KEYS

Unknown sections or keys raise :class:`ConfigError` naming the key.
"""

import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .coefficients import CoefficientSpec, interpolate_alpha, regularize_eps, truncate_M
from .exceptions import ConfigError, InvalidParameterError
from .solver import TorusGrid

SUITES = ("kernel", "moments", "holder", "comparison", "positivity", "critical", "superlinear", "tail", "all")

COEFFICIENT_KEYS = {
    "kind", "A1", "A2", "delta", "sign", "sigma_kind", "tail", "mode", "eps", "alpha", "M",
    "b_scale", "sigma_scale", "b_slope", "sigma_slope", "b_const", "sigma_const",
    "unsafe_hypotheses", "table_z", "table_b",
}
GRID_KEYS = {"n", "dt", "T_end", "snapshot_stride"}
NOISE_KEYS = {"master_seed", "replicas"}
INITIAL_KEYS = {"value", "cos_amplitude"}
RUN_KEYS = {"suite", "out", "workers"}
TOLERANCE_KEYS = {"comparison", "kernel_mass", "kernel_l2", "semigroup"}
PARAM_KEYS = {
    "ladder_base", "epsilon_exponents", "threshold", "glue_exponents", "glue_replicas",
    "moment_p", "alphas", "M_exponents", "chebyshev_p", "tail_A1", "tail_A2", "tail_p", "tail_beta",
    "tail_C", "tail_T", "tail_m_max", "holder_betas", "holder_space_offsets", "holder_time_offsets",
    "holder_pilot_replicas", "holder_replicas", "drift_gap", "initial_shift", "kernel_points",
}
SECTIONS = {
    "coefficients": COEFFICIENT_KEYS, "grid": GRID_KEYS, "noise": NOISE_KEYS, "initial": INITIAL_KEYS,
    "run": RUN_KEYS, "tolerances": TOLERANCE_KEYS, "params": PARAM_KEYS,
}

DEFAULT_TOLERANCES = {"comparison": 1e-8, "kernel_mass": 1e-9, "kernel_l2": 1e-8, "semigroup": 1e-10}


@dataclass
class ExperimentConfig:
    coefficients: dict = field(default_factory=dict)
    grid: dict = field(default_factory=lambda: {"n": 128, "dt": 1e-5, "T_end": 0.05, "snapshot_stride": 1000})
    noise: dict = field(default_factory=lambda: {"master_seed": 1, "replicas": 100})
    initial: dict = field(default_factory=lambda: {"value": 1.0})
    run: dict = field(default_factory=lambda: {"suite": "all", "out": "out", "workers": 1})
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    # -- access ---------------------------------------------------------

    def param(self, key, default):
        return self.params.get(key, default)

    def tolerance(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    @property
    def seed(self):
        return int(self.noise["master_seed"])

    @property
    def replicas(self):
        return int(self.noise["replicas"])

    @property
    def workers(self):
        return int(self.run.get("workers", 1))

    @property
    def suite(self):
        return self.run.get("suite", "all")

    def torus_grid(self):
        g = self.grid
        try:
            return TorusGrid(int(g["n"]), float(g["dt"]), float(g["T_end"]))
        except InvalidParameterError as exc:
            raise ConfigError(f"[grid] {exc}", key="grid") from exc

    @property
    def stride(self):
        return int(self.grid.get("snapshot_stride", 1))

    def initial_field(self, n):
        value = float(self.initial.get("value", 1.0))
        amp = float(self.initial.get("cos_amplitude", 0.0))
        return value + amp * np.cos(2.0 * np.pi * np.arange(n) / n)

    def base_spec(self, **overrides):
        return spec_from_section({**self.coefficients, **overrides})

    def coefficient(self, **overrides):
        return coefficient_from_section({**self.coefficients, **overrides})

    # -- validation and serialisation -------------------------------------

    def validate(self):
        for section, keys in SECTIONS.items():
            data = getattr(self, section)
            if not isinstance(data, dict):
                raise ConfigError(f"[{section}] must be a table", key=section)
            for k in data:
                if k not in keys:
                    raise ConfigError(f"unknown key '{k}' in [{section}]", key=f"{section}.{k}")
        for k in ("n", "dt", "T_end"):
            if k not in self.grid:
                raise ConfigError(f"missing key '{k}' in [grid]", key=f"grid.{k}")
        if "master_seed" not in self.noise:
            raise ConfigError("missing key 'master_seed' in [noise]", key="noise.master_seed")
        seed = self.noise["master_seed"]
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer", key="noise.master_seed")
        reps = self.noise.get("replicas", 1)
        if not isinstance(reps, int) or reps < 1:
            raise ConfigError("replicas must be an integer >= 1", key="noise.replicas")
        if int(self.run.get("workers", 1)) < 1:
            raise ConfigError("workers must be >= 1", key="run.workers")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite '{self.suite}'", key="run.suite")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"tolerance '{k}' must be positive", key=f"tolerances.{k}")
        if int(self.grid.get("snapshot_stride", 1)) < 1:
            raise ConfigError("snapshot_stride must be >= 1", key="grid.snapshot_stride")
        self.torus_grid()
        if self.coefficients:
            try:
                self.coefficient()
            except (InvalidParameterError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"[coefficients] {exc}", key="coefficients") from exc

    def to_dict(self):
        out = {}
        for section in SECTIONS:
            data = getattr(self, section)
            if data:
                out[section] = dict(data)
        return out

    def to_toml(self):
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        for section in data:
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", key=section)
        base = cls.__dataclass_fields__
        kwargs = {}
        for section in SECTIONS:
            if section in data:
                default = base[section].default_factory()
                if section in ("grid", "noise", "run"):
                    default.update(data[section])
                    kwargs[section] = default
                else:
                    kwargs[section] = dict(data[section])
        return cls(**kwargs)

    def with_overrides(self, seed=None, replicas=None, workers=None, out=None, suite=None):
        d = self.to_dict()
        if seed is not None:
            d.setdefault("noise", {})["master_seed"] = int(seed)
        if replicas is not None:
            d.setdefault("noise", {})["replicas"] = int(replicas)
        if workers is not None:
            d.setdefault("run", {})["workers"] = int(workers)
        if out is not None:
            d.setdefault("run", {})["out"] = str(out)
        if suite is not None:
            d.setdefault("run", {})["suite"] = suite
        return ExperimentConfig.from_dict(d)


_LINE = re.compile(r"line (\d+)")


def loads(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = _LINE.search(str(exc))
        line = int(m.group(1)) if m else None
        raise ConfigError(f"config parse error: {exc}", line=line) from exc
    return ExperimentConfig.from_dict(data)


def load(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads(text)
    except ConfigError as exc:
        where = f"{path}:{exc.line}" if exc.line else str(path)
        raise ConfigError(f"{where}: {exc}", key=exc.key, line=exc.line) from None


def dump(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.to_toml())


_SPEC_FIELDS = ("kind", "A1", "A2", "delta", "sign", "sigma_kind", "tail", "b_scale", "sigma_scale",
                "b_slope", "sigma_slope", "b_const", "sigma_const", "unsafe_hypotheses")


def spec_from_section(section):
    kwargs = {k: section[k] for k in _SPEC_FIELDS if k in section}
    if "table_z" in section or "table_b" in section:
        if "table_z" not in section or "table_b" not in section:
            raise ConfigError("table_z and table_b must be given together", key="coefficients.table_z")
        kwargs["table"] = (tuple(section["table_z"]), tuple(section["table_b"]))
    try:
        return CoefficientSpec(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[coefficients] {exc}", key="coefficients") from exc
    except InvalidParameterError as exc:
        raise ConfigError(f"[coefficients] {exc}", key="coefficients") from exc


def coefficient_from_section(section):
    spec = spec_from_section(section)
    mode = section.get("mode", "none")
    if mode == "none":
        return spec
    if mode not in ("eps", "alpha", "truncate"):
        raise ConfigError(f"unknown mode '{mode}'", key="coefficients.mode")
    key = {"eps": "eps", "alpha": "alpha", "truncate": "M"}[mode]
    if key not in section:
        raise ConfigError(f"mode '{mode}' needs key '{key}'", key=f"coefficients.{key}")
    level = float(section[key])
    try:
        if mode == "eps":
            return regularize_eps(spec, level)
        if mode == "alpha":
            return interpolate_alpha(spec, level)
        return truncate_M(spec, level)
    except InvalidParameterError as exc:
        raise ConfigError(f"[coefficients] {exc}", key=f"coefficients.{key}") from exc
