"""Run configuration: a TOML document with fixed sections and keys.

Every key is optional; omitted keys take the defaults below.  Unknown
sections or keys are rejected by name, and every value is checked against
the preconditions of the module that consumes it before anything runs.

    [domain]         kind = "interval" | "rectangle", lengths = [...]
    [discretization] n_modes, nodes (per axis; [] means 4 kmax + 1, the minimum is 4 kmax)
    [exponents]      s, p
    [schedule]       eps0, ratio, steps
    [tolerances]     tol_inner, tol_pos, energy, max_iter
    [solver]         shift, shift_factor, eps (for solve-eps), n_test
    [limit]          tol, modes, refine
    [validator]      m, gamma, height, calibration_modes
    [probe]          ratio
    [output]         directory
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .continuation import EpsSchedule
from .extension import ADEQUACY
from .geometry import NODES_PER_MODE, Domain, mode_indices
from .monotone import SolveOptions
from .spectral import FracExponent


class ConfigError(ValueError):
    """Missing file, malformed document, unknown key or violated constraint."""


@dataclass(frozen=True)
class RunConfig:
    kind: str = "interval"
    lengths: tuple[float, ...] = ()
    n_modes: int = 256
    nodes: tuple[int, ...] = ()
    s: float = 0.5
    p: float = 0.5
    eps0: float = 0.5
    ratio: float = 0.5
    steps: int = 14
    tol_inner: float = 1e-10
    tol_pos: float = 1e-8
    energy_tol: float = 1e-6
    max_iter: int = 200_000
    shift: str = "bracket-aware"
    shift_factor: float = 1.1
    eps: float = 0.1
    n_test: int = 10
    limit_tol: float = 1e-3
    limit_modes: int = 10
    limit_refine: int = 16
    ygrid_m: int = 4000
    ygrid_gamma: float = 3.0
    ygrid_height: float = 10.0
    calibration_modes: int = 5
    probe_ratio: float = 0.4
    directory: str = "runs"

    # derived views -------------------------------------------------------

    @property
    def domain(self) -> Domain:
        return Domain(self.kind, self.lengths)

    @property
    def exponents(self) -> FracExponent:
        return FracExponent(self.s, self.p)

    @property
    def schedule(self) -> EpsSchedule:
        return EpsSchedule(self.eps0, self.ratio, self.steps)

    @property
    def probe_schedule(self) -> EpsSchedule:
        return EpsSchedule.ending_at(self.schedule.final, self.probe_ratio)

    @property
    def options(self) -> SolveOptions:
        return SolveOptions(tol_inner=self.tol_inner, max_iter=self.max_iter, shift=self.shift,
                            tol_pos=self.tol_pos, n_test=self.n_test, shift_factor=self.shift_factor,
                            energy_tol=self.energy_tol)

    @property
    def grid_nodes(self) -> tuple[int, ...] | None:
        return self.nodes or None


# (section, key) -> RunConfig field, in document order
_LAYOUT: dict[str, dict[str, str]] = {
    "domain": {"kind": "kind", "lengths": "lengths"},
    "discretization": {"n_modes": "n_modes", "nodes": "nodes"},
    "exponents": {"s": "s", "p": "p"},
    "schedule": {"eps0": "eps0", "ratio": "ratio", "steps": "steps"},
    "tolerances": {"tol_inner": "tol_inner", "tol_pos": "tol_pos", "energy": "energy_tol",
                   "max_iter": "max_iter"},
    "solver": {"shift": "shift", "shift_factor": "shift_factor", "eps": "eps", "n_test": "n_test"},
    "limit": {"tol": "limit_tol", "modes": "limit_modes", "refine": "limit_refine"},
    "validator": {"m": "ygrid_m", "gamma": "ygrid_gamma", "height": "ygrid_height",
                  "calibration_modes": "calibration_modes"},
    "probe": {"ratio": "probe_ratio"},
    "output": {"directory": "directory"},
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, name: str, value):
    kind = _TYPES[name]
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected {kind}, got a boolean")
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind == "float":
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{key}: expected a finite number, got {value!r}")
        return float(value)
    # tuples
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected an array, got {value!r}")
    item = int if "int" in kind else float
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key}: array entries must be numbers, got {v!r}")
        if item is int and not float(v).is_integer():
            raise ConfigError(f"{key}: array entries must be integers, got {v!r}")
        out.append(item(v))
    return tuple(out)


def config_from_dict(doc: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from a parsed document."""
    values = {}
    for section, body in doc.items():
        if section not in _LAYOUT:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in _LAYOUT[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            name = _LAYOUT[section][key]
            values[name] = _coerce(f"{section}.{key}", name, value)
    if "lengths" not in values:
        values["lengths"] = (math.pi,) * (2 if values.get("kind") == "rectangle" else 1)
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def _field_error(key: str, exc: Exception) -> ConfigError:
    return ConfigError(f"{key}: {exc}")


def validate(cfg: RunConfig) -> None:
    """Check every field against the preconditions of its consumer."""
    try:
        dom = cfg.domain
    except ValueError as exc:
        raise _field_error("domain", exc) from None
    if cfg.n_modes < 1:
        raise ConfigError(f"discretization.n_modes: must be >= 1, got {cfg.n_modes}")
    if cfg.nodes:
        if len(cfg.nodes) != dom.dim:
            raise ConfigError(f"discretization.nodes: need {dom.dim} entries for a {dom.kind}, got {len(cfg.nodes)}")
        kmax = mode_indices(dom, cfg.n_modes).max(axis=0)
        for ax, (n, k) in enumerate(zip(cfg.nodes, kmax)):
            if n < NODES_PER_MODE * k:
                raise ConfigError(f"discretization.nodes[{ax}]: {n} nodes cannot resolve wave number {k}; "
                                  f"need >= {NODES_PER_MODE * k}")
    try:
        cfg.exponents
    except ValueError as exc:
        raise _field_error("exponents", exc) from None
    try:
        cfg.schedule
    except ValueError as exc:
        raise _field_error("schedule", exc) from None
    try:
        cfg.options
    except ValueError as exc:
        raise _field_error("tolerances/solver", exc) from None
    if not cfg.eps > 0:
        raise ConfigError(f"solver.eps: must be > 0, got {cfg.eps}")
    if cfg.n_test > cfg.n_modes:
        raise ConfigError(f"solver.n_test: must be <= n_modes = {cfg.n_modes}")
    if not cfg.limit_tol > 0:
        raise ConfigError(f"limit.tol: must be > 0, got {cfg.limit_tol}")
    if not 1 <= cfg.limit_modes <= cfg.n_modes:
        raise ConfigError(f"limit.modes: must lie in [1, {cfg.n_modes}], got {cfg.limit_modes}")
    if cfg.limit_refine < 1:
        raise ConfigError(f"limit.refine: must be >= 1, got {cfg.limit_refine}")
    if cfg.ygrid_m < 8:
        raise ConfigError(f"validator.m: must be >= 8, got {cfg.ygrid_m}")
    if cfg.ygrid_gamma < 1:
        raise ConfigError(f"validator.gamma: must be >= 1, got {cfg.ygrid_gamma}")
    if cfg.ygrid_height < ADEQUACY:
        raise ConfigError(f"validator.height: Y sqrt(lambda_1) must be >= {ADEQUACY}, got {cfg.ygrid_height}")
    if not 3 <= cfg.calibration_modes <= cfg.n_modes:
        raise ConfigError(f"validator.calibration_modes: must lie in [3, {cfg.n_modes}], got {cfg.calibration_modes}")
    if not 0 < cfg.probe_ratio < 1 or cfg.probe_ratio == cfg.ratio:
        raise ConfigError(f"probe.ratio: must lie in (0, 1) and differ from schedule.ratio, got {cfg.probe_ratio}")
    if not cfg.directory:
        raise ConfigError("output.directory: must not be empty")


def loads_config(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the message carries "(at line L, column C)"
        raise ConfigError(f"parse error: {exc}") from None
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return loads_config(path.read_text(encoding="utf-8"))


def config_to_dict(cfg: RunConfig) -> dict:
    flat = asdict(cfg)
    return {section: {key: list(flat[name]) if isinstance(flat[name], tuple) else flat[name]
                      for key, name in keys.items()}
            for section, keys in _LAYOUT.items()}


def dumps_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def default_config(**overrides) -> RunConfig:
    """Defaults with ``lengths`` filled in for the chosen ``kind``."""
    kind = overrides.get("kind", "interval")
    overrides.setdefault("lengths", (math.pi,) * (2 if kind == "rectangle" else 1))
    cfg = RunConfig(**overrides)
    validate(cfg)
    return cfg


__all__ = ["ConfigError", "RunConfig", "config_from_dict", "config_to_dict", "default_config",
           "dumps_config", "load_config", "loads_config", "validate"]
