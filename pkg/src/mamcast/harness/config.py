"""Experiment configuration and validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from mamcast.errors import ConfigError

EXPERIMENTS = ("convergence", "rate_vs_power", "rate_vs_users", "two_user_los", "bab_complexity")
ALL_METHODS = ("ao_sca", "greedy", "bab", "exhaustive", "fpa", "fpa_grid")

ALLOWED_METHODS = {
    "convergence": ("ao_sca",),
    "rate_vs_power": ("ao_sca", "fpa", "fpa_grid", "greedy"),
    "rate_vs_users": ("ao_sca", "fpa", "fpa_grid", "greedy"),
    "two_user_los": ("bab", "greedy", "exhaustive", "fpa", "ao_sca"),
    "bab_complexity": ("bab", "greedy", "exhaustive"),
}

# sweep axes that differ from the scalar defaults below
EXPERIMENT_DEFAULTS = {
    "convergence": {"methods": ("ao_sca",), "init": "random"},
    "rate_vs_power": {"power_dbm": (0.0, 5.0, 10.0, 15.0, 20.0), "methods": ("ao_sca", "fpa")},
    "rate_vs_users": {"k": (2, 3, 4, 5, 6, 7, 8), "methods": ("ao_sca", "fpa")},
    "two_user_los": {
        "k": (2,),
        "m": (16,),
        "power_dbm": (0.0, 5.0, 10.0, 15.0, 20.0),
        "methods": ("bab", "greedy", "exhaustive", "fpa"),
    },
    "bab_complexity": {"k": (2,), "m": (9, 16, 25), "methods": ("bab", "greedy", "exhaustive")},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation sweep. List-valued fields are swept as a Cartesian product."""

    experiment: str
    m: tuple = (25,)
    n: tuple = (4,)
    k: tuple = (5,)
    power_dbm: tuple = (10.0,)
    noise_dbm: float = -95.0
    carrier_ghz: float = 5.0
    cell_radius: float = 150.0
    paths: int = 4
    spacing: float = 0.5
    trials: int = 100
    seed: int = 0
    methods: tuple = ()
    init: str = "fpa"
    eps: float = 1e-4

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        base = dict(EXPERIMENT_DEFAULTS[experiment])
        base.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(experiment=experiment, **_normalise(base))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict) or "experiment" not in data:
            raise ConfigError("config file must be a JSON object with an 'experiment' key")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        experiment = overrides.pop("experiment", None) or data.pop("experiment")
        data.pop("experiment", None)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.for_experiment(experiment, **data)

    def validate(self) -> None:
        for name in ("m", "n", "k"):
            vals = getattr(self, name)
            if not vals or any(int(v) != v or v < 1 for v in vals):
                raise ConfigError(f"{name} must be a non-empty list of positive integers")
        if min(self.m) < max(self.n):
            raise ConfigError(f"need N <= M (got M={self.m}, N={self.n})")
        if not self.power_dbm:
            raise ConfigError("power_dbm must not be empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.paths < 1 or self.cell_radius <= 0 or self.carrier_ghz <= 0 or self.spacing <= 0:
            raise ConfigError("paths, cell_radius, carrier_ghz and spacing must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.init not in ("fpa", "random"):
            raise ConfigError("init must be 'fpa' or 'random'")
        allowed = ALLOWED_METHODS[self.experiment]
        bad = [m for m in self.methods if m not in allowed]
        if bad or not self.methods:
            raise ConfigError(f"methods {bad or '[]'} not valid for {self.experiment}; allowed: {allowed}")
        if self.experiment in ("two_user_los", "bab_complexity") and self.k != (2,):
            raise ConfigError(f"{self.experiment} is a two-user experiment (k must be 2)")
        if "greedy" in self.methods and set(self.k) != {2}:
            raise ConfigError("greedy placement needs exactly two users")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **_normalise(changes))


def _normalise(values: dict) -> dict:
    out = {}
    for key, val in values.items():
        if key in ("m", "n", "k"):
            val = tuple(int(v) for v in _as_list(val))
        elif key == "power_dbm":
            val = tuple(float(v) for v in _as_list(val))
        elif key == "methods":
            val = tuple(str(v) for v in _as_list(val))
        out[key] = val
    return out


def _as_list(val):
    if isinstance(val, str):
        return [v.strip() for v in val.split(",") if v.strip()]
    if isinstance(val, (list, tuple)):
        return list(val)
    return [val]
