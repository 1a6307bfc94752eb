"""Run configuration: ``key = value`` text, one setting per line.

Blank lines and ``#`` comments are ignored. Lists are comma separated;
integer lists also accept inclusive ranges ``a..b`` (``seeds = 0..9``).
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from . import bath as bathmod
from .errors import (
    FiniteBathError,
    InvalidBandwidth,
    InvalidCount,
    InvalidCoupling,
    InvalidHamiltonian,
    InvalidInterval,
    InvalidSeed,
    ParseError,
    ValidationError,
)
from .experiments import PRESETS, SWEEP_PRESETS

__all__ = ["COMMANDS", "SPECS", "SOLVERS", "KEYS", "RunConfig", "parse_lines",
           "parse_config", "build_config"]

COMMANDS = ("build", "solve", "evolve", "fit", "scenario", "sweep", "ensemble")
SPECS = ("equally_spaced", "random", "no_resonant", "explicit")
SOLVERS = ("arrowhead", "dense")


def _int_list(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError(f"empty range {part}")
            out.extend(range(a, b + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _float_list(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _opt(conv):
    def inner(text):
        return None if text.strip().lower() in ("", "auto", "none") else conv(text)
    return inner


# key -> (converter, default, help)
KEYS: dict[str, tuple] = {
    "command": (str, None, "one of " + ", ".join(COMMANDS)),
    "preset": (_opt(str), None, "named scenario; defines the bath"),
    "spec": (str, "equally_spaced", "bath family: " + ", ".join(SPECS)),
    "N": (int, 102, "total number of oscillators"),
    "p": (float, 1.0, "bath bandwidth (equally spaced families)"),
    "g": (float, 0.2, "coupling scale; each coupling is g/sqrt(N-1)"),
    "lo": (float, 0.5, "lower frequency bound (random family)"),
    "hi": (float, 1.5, "upper frequency bound (random family)"),
    "seed": (int, 0, "random bath seed"),
    "v1": (float, 1.0, "system frequency (explicit family)"),
    "bath_freqs": (_float_list, None, "bath frequencies (explicit family, required)"),
    "couplings": (_float_list, None, "couplings (explicit family, required)"),
    "t_start": (float, 0.0, "first time sample"),
    "t_end": (float, 50.0, "last time sample"),
    "steps": (int, 2001, "number of time samples"),
    "tol": (float, 1e-13, "relative eigensolver tolerance"),
    "solver": (str, "arrowhead", "eigensolver: " + ", ".join(SOLVERS)),
    "out": (str, "finitebath_out", "output directory (FINITEBATH_OUT overrides)"),
    "seeds": (_int_list, tuple(range(10)), "ensemble seeds"),
    "N_values": (_int_list, (102, 1002), "ensemble bath sizes"),
    "window_start": (float, 50.0, "ensemble window start"),
    "window_end": (float, 100.0, "ensemble window end"),
    "ensemble_step": (float, 0.05, "ensemble time step"),
    "g_grid": (_opt(_float_list), None, "sweep couplings (default u/400, u = 1..400)"),
    "workers": (int, 1, "worker threads for ensembles"),
}

_BATH_KEYS = ("spec", "N", "p", "g", "lo", "hi", "seed", "v1", "bath_freqs", "couplings")


@dataclass(frozen=True)
class RunConfig:
    command: str
    preset: Optional[str] = None
    spec: str = "equally_spaced"
    N: int = 102
    p: float = 1.0
    g: float = 0.2
    lo: float = 0.5
    hi: float = 1.5
    seed: int = 0
    v1: float = 1.0
    bath_freqs: Optional[tuple] = None
    couplings: Optional[tuple] = None
    t_start: float = 0.0
    t_end: float = 50.0
    steps: int = 2001
    tol: float = 1e-13
    solver: str = "arrowhead"
    out: str = "finitebath_out"
    seeds: tuple = tuple(range(10))
    N_values: tuple = (102, 1002)
    window_start: float = 50.0
    window_end: float = 100.0
    ensemble_step: float = 0.05
    g_grid: Optional[tuple] = None
    workers: int = 1

    def bath_spec(self) -> bathmod.BathSpec:
        """The bath this run acts on (the preset's bath when a preset is set)."""
        if self.preset in PRESETS:
            return PRESETS[self.preset].spec
        if self.spec == "equally_spaced":
            return bathmod.EquallySpaced(self.N, self.p, self.g)
        if self.spec == "random":
            return bathmod.RandomUniform(self.N, self.lo, self.hi, self.g, self.seed)
        if self.spec == "no_resonant":
            return bathmod.EquallySpacedNoResonant(self.N, self.p, self.g)
        return bathmod.Explicit(self.v1, self.bath_freqs or (), self.couplings or ())

    def items(self) -> list[tuple[str, object]]:
        """Settings in declaration order, for echoing into manifests."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            out.append((f.name, v))
        return out


def parse_lines(text: str) -> dict[str, tuple[str, int]]:
    """Raw ``{key: (value, line)}``; later lines override earlier ones."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ParseError(lineno, f"expected 'key = value', got {body!r}")
        if not key:
            raise ParseError(lineno, "missing key before '='")
        if key not in KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        raw[key] = (value, lineno)
    return raw


def _key_for(exc: FiniteBathError) -> str:
    if isinstance(exc, InvalidCount):
        return "N"
    if isinstance(exc, InvalidBandwidth):
        return "p"
    if isinstance(exc, InvalidCoupling):
        return "g"
    if isinstance(exc, InvalidSeed):
        return "seed"
    if isinstance(exc, InvalidInterval):
        return "hi" if "lo < hi" in str(exc) else "lo"
    if isinstance(exc, InvalidHamiltonian):
        return "v1" if "system frequency" in str(exc) else "bath_freqs"
    return "spec"


def build_config(raw: dict[str, tuple[str, int]]) -> RunConfig:
    """Convert and validate raw settings (``value`` strings keyed by name)."""
    values = {}
    for key, (text, lineno) in raw.items():
        if key not in KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        conv = KEYS[key][0]
        try:
            values[key] = conv(text)
        except ValueError as exc:
            raise ValidationError(key, f"cannot parse {text!r}: {exc}") from None
    if not values.get("command"):
        raise ValidationError("command", "required key is missing")
    cfg = RunConfig(**values)
    _validate(cfg, set(values))
    return cfg


def parse_config(text: str) -> RunConfig:
    return build_config(parse_lines(text))


def _validate(cfg: RunConfig, given: set) -> None:
    if cfg.command not in COMMANDS:
        raise ValidationError("command", f"must be one of {', '.join(COMMANDS)}")
    if cfg.spec not in SPECS:
        raise ValidationError("spec", f"must be one of {', '.join(SPECS)}")
    if cfg.solver not in SOLVERS:
        raise ValidationError("solver", f"must be one of {', '.join(SOLVERS)}")
    if not cfg.tol > 0:
        raise ValidationError("tol", "must be positive")
    if cfg.steps < 1:
        raise ValidationError("steps", "must be at least 1")
    if cfg.t_end < cfg.t_start:
        raise ValidationError("t_end", "must not precede t_start")
    if cfg.workers < 1:
        raise ValidationError("workers", "must be at least 1")

    if cfg.preset is not None:
        known = PRESETS if cfg.command != "sweep" else SWEEP_PRESETS
        if cfg.preset not in known:
            raise ValidationError(
                "preset", f"unknown preset {cfg.preset!r}; choose from {', '.join(known)}")
        clash = sorted(given & set(_BATH_KEYS))
        if cfg.command == "sweep":
            clash = [k for k in clash if k in ("N", "p")]
        if clash:
            raise ValidationError(clash[0], f"conflicts with preset {cfg.preset}")
        if cfg.command != "sweep":
            return

    if cfg.command == "sweep":
        N, p = SWEEP_PRESETS.get(cfg.preset, (cfg.N, cfg.p))
        try:
            bathmod.build_equally_spaced(N, p, 0.0)
        except FiniteBathError as exc:
            raise ValidationError(_key_for(exc), str(exc)) from None
        grid = cfg.g_grid
        if grid is not None:
            if not grid:
                raise ValidationError("g_grid", "must not be empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValidationError("g_grid", "must be strictly ascending")
            if any(x < 0 for x in grid):
                raise ValidationError("g_grid", "couplings must be nonnegative")
        return

    if cfg.command == "ensemble":
        if len(cfg.seeds) < 2:
            raise ValidationError("seeds", "an ensemble needs at least two seeds")
        if len(set(cfg.seeds)) != len(cfg.seeds):
            raise ValidationError("seeds", "seeds must be distinct")
        if not cfg.N_values:
            raise ValidationError("N_values", "must not be empty")
        if not cfg.window_start < cfg.window_end:
            raise ValidationError("window_end", "must exceed window_start")
        if not cfg.ensemble_step > 0:
            raise ValidationError("ensemble_step", "must be positive")
        for N in cfg.N_values:
            for s in cfg.seeds:
                try:
                    bathmod.RandomUniform(N, cfg.lo, cfg.hi, cfg.g, s)
                except FiniteBathError as exc:
                    key = _key_for(exc)
                    raise ValidationError({"N": "N_values", "seed": "seeds"}.get(key, key),
                                          str(exc)) from None
        return

    if cfg.spec == "explicit":
        for key in ("bath_freqs", "couplings"):
            if getattr(cfg, key) is None:
                raise ValidationError(key, "required key is missing for spec=explicit")
    try:
        cfg.bath_spec()
    except FiniteBathError as exc:
        raise ValidationError(_key_for(exc), str(exc)) from None
