"""Flat key-value run configuration.

The format is dotted-section text, one ``section.key = value`` per line,
``#`` comments allowed; it parses with no dependencies and round-trips
exactly (parse -> serialise -> parse is the identity).
"""
from __future__ import annotations

from dataclasses import dataclass

from .diffusion import (
    ConstantDiffusion,
    DiffusionModel,
    PowerLawDiffusion,
    load_tabulated,
)
from .errors import ConfigError
from .initial_data import InitialSpec
from .model import Grid, Params
from .solver import SolverConfig


@dataclass(frozen=True)
class DiffusionSpec:
    """Serialisable description of the diffusivity model."""

    kind: str = "power-law"
    c1: float | None = 1.0
    p: float | None = 2.0
    value: float | None = None
    file: str | None = None

    def build(self) -> DiffusionModel:
        if self.kind == "power-law":
            if self.c1 is None or self.p is None:
                raise ConfigError("power-law diffusion needs c1 and p")
            return PowerLawDiffusion(self.c1, self.p)
        if self.kind == "constant":
            if self.value is None:
                raise ConfigError("constant diffusion needs value")
            return ConstantDiffusion(self.value, c1=self.c1, p=self.p)
        if self.kind == "tabulated":
            if self.file is None:
                raise ConfigError("tabulated diffusion needs file")
            return load_tabulated(self.file, c1=self.c1, p=self.p)
        raise ConfigError(f"unknown diffusion kind {self.kind!r}")


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    kind: str  # linear | geometric
    start: float
    stop: float
    count: int

    def values(self) -> list[float]:
        if self.count < 0:
            raise ConfigError("sweep count must be >= 0")
        if self.count == 0:
            return []
        if self.count == 1:
            return [self.start]
        if self.kind == "linear":
            step = (self.stop - self.start) / (self.count - 1)
            return [self.start + i * step for i in range(self.count)]
        if self.kind == "geometric":
            if self.start <= 0.0 or self.stop <= 0.0:
                raise ConfigError("geometric sweep needs positive endpoints")
            ratio = (self.stop / self.start) ** (1.0 / (self.count - 1))
            return [self.start * ratio**i for i in range(self.count)]
        raise ConfigError(f"unknown sweep kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    params: Params
    diffusion: DiffusionSpec
    grid: Grid
    solver: SolverConfig
    initial: InitialSpec
    qs: tuple[float, ...] = (3.0,)
    track_subsolution: bool = False
    certificate_q: float | None = None
    certificate_scan: bool = False
    sweep: tuple[SweepAxis, ...] = ()
    sweep_simulate: bool = False


# ---------------------------------------------------------------------------
# text <-> dict


def _parse_lines(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or "." not in key:
            raise ConfigError(f"line {lineno}: keys are dotted, e.g. params.D")
        entries[key] = value
    return entries


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


class _Reader:
    def __init__(self, entries: dict[str, str]):
        self.entries = dict(entries)
        self.seen: set[str] = set()

    def _get(self, key: str):
        self.seen.add(key)
        return self.entries.get(key)

    def str_(self, key: str, default: str | None = None) -> str | None:
        raw = self._get(key)
        return default if raw is None else raw

    def float_(self, key: str, default: float | None = None) -> float | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc

    def int_(self, key: str, default: int | None = None) -> int | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc

    def bool_(self, key: str, default: bool = False) -> bool:
        raw = self._get(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")

    def floats(self, key: str, default=()) -> tuple[float, ...]:
        raw = self._get(key)
        if raw is None or raw == "":
            return tuple(default)
        try:
            return tuple(float(part) for part in raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"{key}: expected comma-separated numbers") from exc

    def unknown(self) -> list[str]:
        return sorted(set(self.entries) - self.seen)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; unknown keys are an error."""
    reader = _Reader(_parse_lines(text))
    r = reader
    try:
        params = Params(
            eps=r.float_("params.eps", 1.0),
            D=r.float_("params.D", 1.0),
            gamma=r.float_("params.gamma", 0.0),
            M=r.float_("params.M", 1.0),
        )
        grid = Grid(r.int_("grid.n", 256))
        diffusion = DiffusionSpec(
            kind=r.str_("diffusion.kind", "power-law"),
            c1=r.float_("diffusion.c1", 1.0 if r.str_("diffusion.kind", "power-law") == "power-law" else None),
            p=r.float_("diffusion.p", 2.0 if r.str_("diffusion.kind", "power-law") == "power-law" else None),
            value=r.float_("diffusion.value", None),
            file=r.str_("diffusion.file", None),
        )
        thr = r.str_("solver.blowup_threshold", None)
        solver = SolverConfig(
            cfl_safety=r.float_("solver.cfl_safety", 0.4),
            dt_init=r.float_("solver.dt_init", 1e-6),
            dt_min=r.float_("solver.dt_min", 1e-12),
            dt_max=r.float_("solver.dt_max", 1e-2),
            t_end=r.float_("solver.t_end", 1.0),
            blowup_threshold=None if thr in (None, "auto") else float(thr),
            v_solver=r.str_("solver.v_solver", "implicit"),
            output_stride=r.int_("solver.output_stride", 100),
        )
        initial = InitialSpec(
            kind=r.str_("initial.kind", "constant"),
            delta=r.float_("initial.delta", 0.1),
            center=r.float_("initial.center", 0.5),
            width=r.float_("initial.width", 0.1),
            center2=r.float_("initial.center2", 0.75),
            width2=r.float_("initial.width2", 0.05),
            mass_fraction=r.float_("initial.mass_fraction", 0.5),
            u_file=r.str_("initial.u_file", None),
            v0_kind=r.str_("initial.v0_kind", "zero"),
            v0_modes=r.floats("initial.v0_modes", ()),
            v0_file=r.str_("initial.v0_file", None),
        )
        axes = []
        for prefix in ("sweep", "sweep2"):
            parameter = r.str_(f"{prefix}.parameter", None)
            kind = r.str_(f"{prefix}.kind", "linear")
            start = r.float_(f"{prefix}.start", None)
            stop = r.float_(f"{prefix}.stop", None)
            count = r.int_(f"{prefix}.count", None)
            if parameter is None:
                continue
            if start is None or stop is None or count is None:
                raise ConfigError(f"{prefix}: needs start, stop, and count")
            axes.append(SweepAxis(parameter, kind, start, stop, count))
        cfg = RunConfig(
            params=params,
            diffusion=diffusion,
            grid=grid,
            solver=solver,
            initial=initial,
            qs=r.floats("diagnostics.q", (3.0,)),
            track_subsolution=r.bool_("diagnostics.track_subsolution", False),
            certificate_q=r.float_("certificate.q", None),
            certificate_scan=r.bool_("certificate.scan", False),
            sweep=tuple(axes),
            sweep_simulate=r.bool_("sweep.simulate", False),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    unknown = reader.unknown()
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    return cfg


def config_to_dict(cfg: RunConfig) -> dict[str, str]:
    """Canonical flat representation (only non-default-ish core keys are
    always emitted; optional keys appear when set)."""
    out: dict[str, str] = {
        "params.eps": _fmt(cfg.params.eps),
        "params.D": _fmt(cfg.params.D),
        "params.gamma": _fmt(cfg.params.gamma),
        "params.M": _fmt(cfg.params.M),
        "grid.n": _fmt(cfg.grid.n),
        "diffusion.kind": cfg.diffusion.kind,
        "solver.cfl_safety": _fmt(cfg.solver.cfl_safety),
        "solver.dt_init": _fmt(cfg.solver.dt_init),
        "solver.dt_min": _fmt(cfg.solver.dt_min),
        "solver.dt_max": _fmt(cfg.solver.dt_max),
        "solver.t_end": _fmt(cfg.solver.t_end),
        "solver.v_solver": cfg.solver.v_solver,
        "solver.output_stride": _fmt(cfg.solver.output_stride),
        "initial.kind": cfg.initial.kind,
        "initial.v0_kind": cfg.initial.v0_kind,
        "diagnostics.q": _fmt(cfg.qs),
        "diagnostics.track_subsolution": _fmt(cfg.track_subsolution),
    }
    if cfg.diffusion.c1 is not None:
        out["diffusion.c1"] = _fmt(cfg.diffusion.c1)
    if cfg.diffusion.p is not None:
        out["diffusion.p"] = _fmt(cfg.diffusion.p)
    if cfg.diffusion.value is not None:
        out["diffusion.value"] = _fmt(cfg.diffusion.value)
    if cfg.diffusion.file is not None:
        out["diffusion.file"] = cfg.diffusion.file
    if cfg.solver.blowup_threshold is not None:
        out["solver.blowup_threshold"] = _fmt(cfg.solver.blowup_threshold)
    ini = cfg.initial
    if ini.kind == "edge-ramp":
        out["initial.delta"] = _fmt(ini.delta)
    if ini.kind in ("gaussian-bump", "two-bump"):
        out["initial.center"] = _fmt(ini.center)
        out["initial.width"] = _fmt(ini.width)
    if ini.kind == "two-bump":
        out["initial.center2"] = _fmt(ini.center2)
        out["initial.width2"] = _fmt(ini.width2)
        out["initial.mass_fraction"] = _fmt(ini.mass_fraction)
    if ini.u_file is not None:
        out["initial.u_file"] = ini.u_file
    if ini.v0_modes:
        out["initial.v0_modes"] = _fmt(ini.v0_modes)
    if ini.v0_file is not None:
        out["initial.v0_file"] = ini.v0_file
    if cfg.certificate_q is not None:
        out["certificate.q"] = _fmt(cfg.certificate_q)
    if cfg.certificate_scan:
        out["certificate.scan"] = "true"
    for prefix, axis in zip(("sweep", "sweep2"), cfg.sweep):
        out[f"{prefix}.parameter"] = axis.parameter
        out[f"{prefix}.kind"] = axis.kind
        out[f"{prefix}.start"] = _fmt(axis.start)
        out[f"{prefix}.stop"] = _fmt(axis.stop)
        out[f"{prefix}.count"] = _fmt(axis.count)
    if cfg.sweep_simulate:
        out["sweep.simulate"] = "true"
    return out


def config_to_text(cfg: RunConfig) -> str:
    entries = config_to_dict(cfg)
    return "\n".join(f"{key} = {entries[key]}" for key in sorted(entries)) + "\n"


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text)


def apply_override(cfg: RunConfig, parameter: str, value: float) -> RunConfig:
    """Return a copy of the configuration with one dotted key replaced,
    used by parameter sweeps."""
    entries = config_to_dict(cfg)
    known_prefixes = ("params.", "diffusion.", "grid.", "solver.", "initial.",
                      "diagnostics.", "certificate.")
    if not parameter.startswith(known_prefixes):
        raise ConfigError(f"cannot sweep over {parameter!r}")
    if parameter in ("grid.n", "solver.output_stride"):
        entries[parameter] = _fmt(int(round(value)))
    else:
        entries[parameter] = _fmt(value)
    entries.pop("sweep.parameter", None)
    entries.pop("sweep.kind", None)
    entries.pop("sweep.start", None)
    entries.pop("sweep.stop", None)
    entries.pop("sweep.count", None)
    entries.pop("sweep.simulate", None)
    entries.pop("sweep2.parameter", None)
    entries.pop("sweep2.kind", None)
    entries.pop("sweep2.start", None)
    entries.pop("sweep2.stop", None)
    entries.pop("sweep2.count", None)
    text = "\n".join(f"{k} = {v}" for k, v in sorted(entries.items()))
    return parse_config(text)
