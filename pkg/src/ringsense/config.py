"""Run configuration: parsing, validation with field paths, presets and hashing."""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .bae import BaeDrive
from .core import DomainError, SystemParams
from .noise import SqueezeParams

__all__ = [
    "ConfigError",
    "GridSpec",
    "SweepAxis",
    "RunConfig",
    "load_config",
    "config_from_dict",
    "preset",
    "PRESETS",
]


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, such as 1e-17."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridSpec:
    """A 1-D grid; ``spacing`` is ``linear`` or ``log``."""

    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        return np.linspace(self.start, self.stop, self.points)

    def validate(self, path: str):
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"{path}.spacing", f"must be 'linear' or 'log', got {self.spacing!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError(path, "range must be finite")
        if not self.start < self.stop and self.points > 1:
            raise ConfigError(path, "range must be ordered (start < stop)")
        if self.points < 1:
            raise ConfigError(f"{path}.points", "must be >= 1")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError(f"{path}.start", "log spacing needs a positive start")


@dataclass(frozen=True)
class SweepAxis:
    path: str  # e.g. "system.input_power" or "squeeze.r"
    grid: GridSpec


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "mono-squeezed"
    system: SystemParams = field(default_factory=SystemParams)
    squeeze: SqueezeParams = field(default_factory=SqueezeParams)
    drive: BaeDrive = field(default_factory=BaeDrive)
    grid: GridSpec | None = None  # frequency grid in Hz; None selects the command default
    phi: float = math.pi / 2
    angles: int = 65  # φ samples on [0, π] for angle-scan
    powers: GridSpec = GridSpec(1e-17, 1e-11, 25, "log")  # budget axis, W
    bistability_axis: str = "power"
    bistability_grid: GridSpec | None = None  # None selects BISTABILITY_GRIDS[axis]
    sweep: tuple = ()
    emit: str = "both"
    jobs: int | None = None

    def canonical(self) -> dict:
        """Plain-data form used for hashing and for the manifest."""
        d = asdict(self)
        d.pop("jobs")
        return d

    def config_hash(self, command: str) -> str:
        blob = json.dumps({"command": command, "config": self.canonical()}, sort_keys=True, default=_json_default)
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_override(self, path: str, value) -> "RunConfig":
        section, _, name = path.partition(".")
        target = getattr(self, section)
        if name:
            return replace(self, **{section: replace(target, **{name: value})})
        return replace(self, **{section: value})


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


# default sweep per axis: power per tone in W, κ/2π in Hz
BISTABILITY_GRIDS = {"power": GridSpec(1e-22, 1e-9, 53, "log"), "kappa": GridSpec(10.0, 1e7, 61, "log")}

_SECTIONS = {"system": SystemParams, "squeeze": SqueezeParams, "drive": BaeDrive}
_SWEEPABLE = {f"{s}.{f.name}" for s, cls in _SECTIONS.items() for f in fields(cls)} | {"phi"}


def _build(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a table")
    names = {f.name for f in fields(cls)}
    for k in data:
        if k not in names:
            raise ConfigError(f"{path}.{k}", "unknown field")
    try:
        return cls(**data)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _grid(data, path) -> GridSpec:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a table with start, stop, points")
    try:
        g = GridSpec(float(data["start"]), float(data["stop"]), int(data["points"]), data.get("spacing", "linear"))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing") from None
    unknown = set(data) - {"start", "stop", "points", "spacing"}
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    g.validate(path)
    return g


def config_from_dict(data: dict, base: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if base is None else base
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a table")
    known = {f.name for f in fields(RunConfig)}
    for k in data:
        if k not in known:
            raise ConfigError(k, "unknown field")
    updates: dict = {}
    for sec, cls in _SECTIONS.items():
        if sec in data:
            merged = {**asdict(getattr(cfg, sec)), **(data[sec] or {})}
            updates[sec] = _build(cls, merged, sec)
    if "scheme" in data:
        if data["scheme"] not in ("mono-squeezed", "bae"):
            raise ConfigError("scheme", "must be 'mono-squeezed' or 'bae'")
        updates["scheme"] = data["scheme"]
    for key in ("grid", "powers", "bistability_grid"):
        if key in data:
            updates[key] = None if data[key] is None and key != "powers" else _grid(data[key], key)
    if "phi" in data:
        updates["phi"] = float(data["phi"])
    if "angles" in data:
        if int(data["angles"]) < 2:
            raise ConfigError("angles", "must be >= 2")
        updates["angles"] = int(data["angles"])
    if "bistability_axis" in data:
        if data["bistability_axis"] not in ("power", "kappa"):
            raise ConfigError("bistability_axis", "must be 'power' or 'kappa'")
        updates["bistability_axis"] = data["bistability_axis"]
    if "emit" in data:
        if data["emit"] not in ("csv", "json", "both"):
            raise ConfigError("emit", "must be 'csv', 'json' or 'both'")
        updates["emit"] = data["emit"]
    if "jobs" in data:
        updates["jobs"] = None if data["jobs"] is None else int(data["jobs"])
    if "sweep" in data:
        axes = []
        for i, ax in enumerate(data["sweep"] or []):
            p = f"sweep[{i}]"
            if not isinstance(ax, dict) or "path" not in ax:
                raise ConfigError(p, "each axis needs a 'path'")
            if ax["path"] not in _SWEEPABLE:
                raise ConfigError(f"{p}.path", f"unknown parameter path {ax['path']!r}")
            axes.append(SweepAxis(ax["path"], _grid({k: v for k, v in ax.items() if k != "path"}, p)))
        updates["sweep"] = tuple(axes)
    return replace(cfg, **updates)


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.load(text, Loader=_Loader) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"cannot parse: {exc}") from None
    return config_from_dict(data, base)


PRESETS = {"paper-defaults": RunConfig}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("--preset", f"unknown preset {name!r}")
    return PRESETS[name]()
