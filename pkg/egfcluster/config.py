"""Run configuration shared by every ``egf-tool`` subcommand.

Configuration files are flat YAML mappings::

    n: 400
    k: 20
    box_size: 7.0
    seed: 3

Values are resolved with the precedence command-line flag > config file >
``EGF_SEED`` environment variable (seed only) > built-in default.
"""

from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import fields
from dataclasses import replace
import os

import yaml

SEED_ENV = "EGF_SEED"
MAX_SEED = 2 ** 64 - 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 400
    k: int = 20
    k0: int = 1
    box_size: float = 7.0
    speed: float = 0.03
    r: float = 1.0
    eta: float = 0.0
    frames: int = 100
    seed: int = 0
    tol: float = 1e-12
    runs: int = 20
    bandwidth_scale: float = 1.0
    z_reg: float = None
    target_k: int = 2
    l_max: int = 100
    table_sizes: tuple = (200, 400, 500)
    pair_candidates: str = "adjacent"
    max_order: int = 500
    jobs: int = 1

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _coerce(f.name, getattr(self, f.name)))
        self.validate()

    def validate(self):
        checks = [
            (self.n >= 2, "n must be at least 2"),
            (self.k >= 1, "k must be at least 1"),
            (1 <= self.k0 <= self.k, "k0 must satisfy 1 <= k0 <= k"),
            (self.box_size > 0, "box_size must be positive"),
            (self.speed > 0, "speed must be positive"),
            (self.r > 0, "r must be positive"),
            (0 <= self.eta <= 1, "eta must lie in [0, 1]"),
            (self.frames >= 1, "frames must be at least 1"),
            (0 <= self.seed <= MAX_SEED, "seed must be an unsigned 64-bit integer"),
            (self.tol > 0, "tol must be positive"),
            (self.runs >= 1, "runs must be at least 1"),
            (self.bandwidth_scale > 0, "bandwidth_scale must be positive"),
            (
                self.z_reg is None or 0 < self.z_reg * self.k < 1,
                "z_reg must lie in (0, 1/k)",
            ),
            (self.target_k >= 1, "target_k must be at least 1"),
            (self.l_max >= 1, "l_max must be at least 1"),
            (
                len(self.table_sizes) >= 1
                and all(size > self.k for size in self.table_sizes),
                "table_sizes must be a nonempty list of sizes larger than k",
            ),
            (
                self.pair_candidates in ("adjacent", "all"),
                "pair_candidates must be 'adjacent' or 'all'",
            ),
            (self.max_order >= 8, "max_order must be at least 8"),
            (self.jobs >= 1, "jobs must be at least 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def check_particle_k(self):
        """Particle runs need fewer neighbors than particles."""
        if self.k >= self.n:
            raise ConfigError(f"k must be smaller than n, got k={self.k}, n={self.n}")

    def to_dict(self):
        data = asdict(self)
        data["table_sizes"] = list(self.table_sizes)
        return data


_INT_KEYS = {
    "n", "k", "k0", "frames", "seed", "runs", "target_k", "l_max", "max_order", "jobs"
}
_FLOAT_KEYS = {"box_size", "speed", "r", "eta", "tol", "bandwidth_scale"}


def _as_int(value):
    if isinstance(value, bool):
        raise ValueError(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(value)
        return int(value)
    return int(str(value).strip())


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return _as_int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key == "z_reg":
            if value is None or (isinstance(value, str) and value.lower() in ("", "none", "null")):
                return None
            return float(value)
        if key == "table_sizes":
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            return tuple(int(v) for v in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}")


def field_names():
    return [f.name for f in fields(RunConfig)]


def from_dict(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(field_names()))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    return RunConfig(**data)


def _read_mapping(path):
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config file {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    return data


def load_config(path):
    return from_dict(_read_mapping(path))


def dump_config(config):
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def save_config(config, path):
    with open(path, "w") as f:
        f.write(dump_config(config))


def resolve_config(path=None, overrides=None, environ=None):
    """Merge defaults, environment seed, config file and flag overrides."""
    environ = os.environ if environ is None else environ
    config = RunConfig()
    file_data = _read_mapping(path) if path is not None else {}
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    if "seed" not in file_data and "seed" not in overrides and SEED_ENV in environ:
        try:
            config = replace(config, seed=environ[SEED_ENV])
        except ConfigError:
            raise ConfigError(f"invalid {SEED_ENV}={environ[SEED_ENV]!r}")
    unknown = sorted(set(overrides) - set(field_names()))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    merged = {**config.to_dict(), **file_data, **overrides}
    return from_dict(merged)
