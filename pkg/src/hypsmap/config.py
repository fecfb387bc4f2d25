"""Run configuration: INI-style ``key = value`` files with ``[section]`` headers.

Every section maps onto a frozen dataclass; unknown sections or keys are
rejected so that typos cannot silently fall back to defaults. Overrides use
``section.key=value`` and are applied after the file is read.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ConfigError",
    "GridSection",
    "OutputSection",
    "SolitonSection",
    "MapSection",
    "RoundtripSection",
    "EvolveSection",
    "KernelSection",
    "SweepSection",
    "RunConfig",
    "load_config",
    "parse_config",
    "apply_override",
]

COMMANDS = ("soliton-check", "roundtrip", "evolve", "kernel-decay", "sweep")


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration entry."""


def _choice(*options):
    return {"choices": options}


@dataclass(frozen=True)
class GridSection:
    n_points: int = 4096
    r_max: float = 20.0

    def validate(self):
        if self.n_points < 16:
            raise ConfigError(f"grid.n_points must be >= 16, got {self.n_points}")
        if not self.r_max > 1.0:
            raise ConfigError(f"grid.r_max must exceed 1, got {self.r_max}")


@dataclass(frozen=True)
class OutputSection:
    path: str = "-"  # "-" writes to stdout
    final_state: str = ""  # evolve only; empty disables the dump
    diagnostic: str = ""  # defaults to <path>.diag, or hypsmap.diag for stdout
    digits: int = 12

    def validate(self):
        if not 1 <= self.digits <= 17:
            raise ConfigError(f"output.digits must lie in [1, 17], got {self.digits}")


@dataclass(frozen=True)
class SolitonSection:
    lambdas: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0)

    def validate(self):
        if not self.lambdas or any(x < 0 for x in self.lambdas):
            raise ConfigError("soliton.lambdas must be a nonempty list of nonnegative numbers")


@dataclass(frozen=True)
class MapSection:
    kind: str = field(default="q_lambda", metadata=_choice("q_lambda", "bump", "constant"))
    lam: float = 0.5
    amplitude: float = 0.4
    twist: float = 1.0

    def validate(self):
        if self.lam < 0:
            raise ConfigError(f"map.lam must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class RoundtripSection:
    probes: int = 20
    probe_size: float = 1e-3
    seed: int = 0

    def validate(self):
        if self.probes < 0:
            raise ConfigError("roundtrip.probes must be nonnegative")
        if not self.probe_size > 0:
            raise ConfigError("roundtrip.probe_size must be positive")


@dataclass(frozen=True)
class EvolveSection:
    dt: float = 1e-3
    t_end: float = 1.0
    every: int = 100
    potentials: str = field(default="full", metadata=_choice("full", "linear", "free"))
    initial: str = field(default="map", metadata=_choice("map", "small", "gaussian", "zero"))
    norm: float = 0.1  # target ||psi+|| for initial = small
    width: float = 1.0  # gaussian width, psi^(+-) = amplitude exp(-r^2 / width^2)
    amplitude: float = 1.0

    def validate(self):
        if not self.dt > 0:
            raise ConfigError(f"evolve.dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ConfigError(f"evolve.t_end must be nonnegative, got {self.t_end}")
        if self.every < 1:
            raise ConfigError("evolve.every must be >= 1")
        if not 0 < self.norm < 2:
            raise ConfigError("evolve.norm must lie in (0, 2)")
        if not self.width > 0:
            raise ConfigError("evolve.width must be positive")


@dataclass(frozen=True)
class KernelSection:
    rho_large: float = 1.0
    t_large: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 32.0)
    t_small: tuple[float, ...] = (0.02, 0.04, 0.08, 0.16)
    rho_small_max: float = 2.0
    n_rho: int = 41
    tol: float = 1e-10

    def validate(self):
        for name in ("t_large", "t_small"):
            ts = getattr(self, name)
            if len(ts) < 4 or any(not 1e-3 <= t <= 1e3 for t in ts):
                raise ConfigError(f"kernel.{name} needs >= 4 values in [1e-3, 1e3]")
            if max(ts) < 8 * min(ts):
                raise ConfigError(f"kernel.{name} must span at least a factor of 8")
        if not 0 <= self.rho_large <= 50 or not 0 < self.rho_small_max <= 50:
            raise ConfigError("kernel distances must lie in [0, 50]")
        if self.n_rho < 2:
            raise ConfigError("kernel.n_rho must be >= 2")
        if not self.tol > 0:
            raise ConfigError("kernel.tol must be positive")


@dataclass(frozen=True)
class SweepSection:
    command: str = field(default="evolve", metadata=_choice(*COMMANDS[:-1]))
    parameter: str = "evolve.dt"
    values: tuple[str, ...] = ()

    def validate(self):
        if "." not in self.parameter:
            raise ConfigError("sweep.parameter must read section.key")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = GridSection()
    output: OutputSection = OutputSection()
    soliton: SolitonSection = SolitonSection()
    map: MapSection = MapSection()
    roundtrip: RoundtripSection = RoundtripSection()
    evolve: EvolveSection = EvolveSection()
    kernel: KernelSection = KernelSection()
    sweep: SweepSection = SweepSection()

    def validate(self) -> "RunConfig":
        for f in dataclasses.fields(self):
            getattr(self, f.name).validate()
        return self

    def items(self):
        """Flat ``(section.key, text)`` pairs in declaration order, for manifests."""
        for sec in dataclasses.fields(self):
            obj = getattr(self, sec.name)
            for f in dataclasses.fields(obj):
                yield f"{sec.name}.{f.name}", format_value(getattr(obj, f.name))


def format_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(text: str, tp, where: str, meta):
    text = text.strip()
    try:
        if tp is int:
            out = int(text)
        elif tp is float:
            out = float(text)
        elif tp is str:
            out = text
        elif typing.get_origin(tp) is tuple:
            (inner, _) = typing.get_args(tp)
            parts = [p for p in (s.strip() for s in text.split(",")) if p]
            out = tuple(_coerce(p, inner, where, {}) for p in parts)
        else:  # pragma: no cover - schema is fixed
            raise TypeError(tp)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r} ({exc})") from None
    if isinstance(out, float) and out != out:
        raise ConfigError(f"{where}: NaN is not allowed")
    choices = meta.get("choices")
    if choices and out not in choices:
        raise ConfigError(f"{where}: {out!r} is not one of {', '.join(choices)}")
    return out


def _section_types(cls):
    hints = typing.get_type_hints(cls)
    return {f.name: (hints[f.name], f.metadata) for f in dataclasses.fields(cls)}


def _build(raw: dict[str, dict[str, str]]) -> RunConfig:
    hints = typing.get_type_hints(RunConfig)
    sections = {}
    for name, values in raw.items():
        if name not in hints:
            raise ConfigError(f"unknown section [{name}]")
        types = _section_types(hints[name])
        kw = {}
        for key, text in values.items():
            if key not in types:
                raise ConfigError(f"unknown key {name}.{key}")
            tp, meta = types[key]
            kw[key] = _coerce(text, tp, f"{name}.{key}", meta)
        sections[name] = hints[name](**kw)
    return RunConfig(**sections).validate()


def _split_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must read section.key=value")
    lhs, value = item.split("=", 1)
    if "." not in lhs:
        raise ConfigError(f"override {item!r} must read section.key=value")
    section, key = lhs.strip().split(".", 1)
    return section, key.strip(), value.strip()


def _read_raw(text: str, source: str) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return {s: dict(cp.items(s)) for s in cp.sections()}


def parse_config(text: str, overrides=(), source: str = "<string>") -> RunConfig:
    raw = _read_raw(text, source)
    for item in overrides:
        section, key, value = _split_override(item)
        raw.setdefault(section, {})[key] = value
    return _build(raw)


def load_config(path, overrides=()) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config(text, overrides, str(p))


def apply_override(cfg: RunConfig, item: str) -> RunConfig:
    """Return ``cfg`` with one ``section.key=value`` override applied."""
    section, key, value = _split_override(item)
    hints = typing.get_type_hints(RunConfig)
    if section not in hints:
        raise ConfigError(f"unknown section [{section}]")
    types = _section_types(hints[section])
    if key not in types:
        raise ConfigError(f"unknown key {section}.{key}")
    tp, meta = types[key]
    sec = dataclasses.replace(getattr(cfg, section), **{key: _coerce(value, tp, f"{section}.{key}", meta)})
    return dataclasses.replace(cfg, **{section: sec}).validate()
