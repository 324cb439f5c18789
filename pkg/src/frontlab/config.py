"""Experiment configuration: one JSON document per experiment.

Every pipeline stage reads its parameters from the same ExperimentConfig;
dotted-path overrides (for instance time.dt=0.0025) patch the raw
document before validation so a sweep script can vary one knob without
editing files.  Validation errors carry the dotted field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .drift import (
    DriftTerm,
    make_bump_drift,
    make_mollified_indicator,
    make_sharp_indicator,
    make_table_drift,
    zero_drift,
)
from .nonlinearity import Nonlinearity, make_cubic, make_from_table

__all__ = [
    "ConfigError",
    "NonlinearityConfig",
    "DriftConfig",
    "WaveConfig",
    "GridConfig",
    "TimeConfig",
    "SupersolutionConfig",
    "SweepConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_overrides",
    "build_nonlinearity",
    "build_drift",
]


class ConfigError(ValueError):
    """Invalid configuration; path names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class NonlinearityConfig:
    kind: str = "cubic"
    theta: float = 0.25
    d_minus: float | None = None
    d_plus: float | None = None
    u_samples: tuple = ()
    f_samples: tuple = ()


@dataclass(frozen=True)
class DriftConfig:
    kind: str = "zero"
    K: float = 0.0
    eps: float = 1.0
    smoothing: float = 0.0
    amplitude: float = 0.0
    center: float = -0.5
    width: float = 0.5
    x0: float = 1.0
    x_samples: tuple = ()
    k_samples: tuple = ()


@dataclass(frozen=True)
class WaveConfig:
    Z: float | None = None
    tol: float = 1e-8
    dz: float | None = None
    n_grid: int = 4001


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -150.0
    x_max: float = 80.0
    n: int = 8192


@dataclass(frozen=True)
class TimeConfig:
    t0: float = -113.0
    t_end: float = 150.0
    dt: float = 0.005
    sample_interval: float = 0.5


@dataclass(frozen=True)
class SupersolutionConfig:
    R_start: float = -15.0
    a: float | None = None
    tol: float = 1e-8
    delta: float | None = None
    max_doublings: int = 6


@dataclass(frozen=True)
class SweepConfig:
    K_values: tuple = ()
    eps_values: tuple = ()
    smoothing_factor: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    wave: WaveConfig = field(default_factory=WaveConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    supersolution: SupersolutionConfig = field(
        default_factory=SupersolutionConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    scheme: str = "imex_upwind"
    monitors: tuple = ("envelope", "lyapunov")
    cutoff_speed: float = 0.15
    tol_env: float = 1e-3
    checkpoint_times: tuple = ()


_SECTIONS = {
    "nonlinearity": NonlinearityConfig,
    "drift": DriftConfig,
    "wave": WaveConfig,
    "grid": GridConfig,
    "time": TimeConfig,
    "supersolution": SupersolutionConfig,
    "sweep": SweepConfig,
}

_LIST_FIELDS = {"u_samples", "f_samples", "x_samples", "k_samples",
                "K_values", "eps_values", "monitors", "checkpoint_times"}


def _coerce(path: str, name: str, typ, value):
    if value is None:
        return None
    if name in _LIST_FIELDS:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, "expected a list")
        return tuple(value)
    if typ in ("int", int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(path, f"unexpected value {value!r}")
    return value


def _build_section(cls, raw: dict, prefix: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")
        kwargs[key] = _coerce(f"{prefix}.{key}", key, known[key].type, value)
    return cls(**kwargs)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw JSON document into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kwargs = {}
    top_known = {f.name for f in fields(ExperimentConfig)}
    for key, value in raw.items():
        if key not in top_known:
            raise ConfigError(key, "unknown section or field")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(key, "expected an object")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif key in ("monitors", "checkpoint_times"):
            kwargs[key] = _coerce(key, key, tuple, value)
        else:
            kwargs[key] = value
    cfg = ExperimentConfig(**kwargs)
    _validate(cfg)
    return cfg


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _validate(cfg: ExperimentConfig):
    nl = cfg.nonlinearity
    _require(nl.kind in ("cubic", "table"), "nonlinearity.kind",
             f"unknown kind {nl.kind!r}")
    if nl.kind == "cubic":
        _require(0.0 < nl.theta < 0.5, "nonlinearity.theta",
                 "must lie in (0, 1/2)")
    else:
        _require(len(nl.u_samples) >= 4 and
                 len(nl.u_samples) == len(nl.f_samples),
                 "nonlinearity.u_samples",
                 "table kind needs matching sample lists of length >= 4")
    d = cfg.drift
    kinds = ("zero", "mollified_indicator", "sharp_indicator", "bump",
             "table")
    _require(d.kind in kinds, "drift.kind", f"unknown kind {d.kind!r}")
    if d.kind in ("mollified_indicator", "sharp_indicator"):
        _require(d.eps > 0, "drift.eps", "must be positive")
    if d.kind == "mollified_indicator":
        _require(0 < d.smoothing < d.eps / 4.0, "drift.smoothing",
                 "must lie in (0, eps/4)")
    if d.kind == "bump":
        _require(d.width > 0, "drift.width", "must be positive")
    _require(cfg.wave.tol > 0, "wave.tol", "must be positive")
    _require(cfg.grid.n >= 8, "grid.n", "need at least 8 nodes")
    _require(cfg.grid.x_min < cfg.grid.x_max, "grid.x_min",
             "must be below grid.x_max")
    t = cfg.time
    _require(t.dt > 0, "time.dt", "must be positive")
    _require(t.t_end > t.t0, "time.t_end", "must exceed time.t0")
    _require(t.sample_interval > 0, "time.sample_interval",
             "must be positive")
    _require(cfg.scheme in ("imex_upwind", "psi_flux"), "scheme",
             f"unknown scheme {cfg.scheme!r}")
    _require(cfg.tol_env > 0, "tol_env", "must be positive")
    _require(cfg.cutoff_speed > 0, "cutoff_speed", "must be positive")
    _require(cfg.supersolution.tol > 0, "supersolution.tol",
             "must be positive")
    for name in ("K_values", "eps_values"):
        vals = getattr(cfg.sweep, name)
        _require(all(isinstance(v, (int, float)) and not isinstance(v, bool)
                     for v in vals),
                 f"sweep.{name}", "entries must be numbers")
    _require(all(v > 0 for v in cfg.sweep.eps_values), "sweep.eps_values",
             "entries must be positive")
    _require(0.0 < cfg.sweep.smoothing_factor < 0.25,
             "sweep.smoothing_factor", "must lie in (0, 1/4)")


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Patch a raw document with key=value strings using dotted paths.

    Values parse as JSON when possible and fall back to plain strings,
    so time.dt=0.0025 and drift.kind=bump both work.
    """
    out = json.loads(json.dumps(raw))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like path=value")
        path, text = item.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        parts = path.split(".")
        node = out
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return out


def load_config(path: str, overrides: list[str] | None = None,
                ) -> ExperimentConfig:
    """Read, patch and validate a JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(path, f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            path, f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw)


def build_nonlinearity(cfg: NonlinearityConfig) -> Nonlinearity:
    if cfg.kind == "cubic":
        return make_cubic(cfg.theta, d_minus=cfg.d_minus, d_plus=cfg.d_plus)
    return make_from_table(cfg.u_samples, cfg.f_samples,
                           d_minus=cfg.d_minus, d_plus=cfg.d_plus)


def build_drift(cfg: DriftConfig) -> DriftTerm:
    if cfg.kind == "zero":
        return zero_drift(cfg.x0)
    if cfg.kind == "mollified_indicator":
        return make_mollified_indicator(cfg.K, cfg.eps, cfg.smoothing)
    if cfg.kind == "sharp_indicator":
        return make_sharp_indicator(cfg.K, cfg.eps)
    if cfg.kind == "bump":
        return make_bump_drift(cfg.amplitude, cfg.center, cfg.width, cfg.x0)
    return make_table_drift(cfg.x_samples, cfg.k_samples)
