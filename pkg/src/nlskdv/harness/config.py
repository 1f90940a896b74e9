"""Run configuration: presets, INI-style config files, validation.

A run is fully described by key/value sections ([coupling], [background],
[scaling], [grid], [integrator], [run]).  Two presets ship with the package:

  paper-sec5  the two-component reference experiment: g = (1, 1), h = 0.5,
              rho0 = (1, 0.1), eps = 0.2, soliton speed 2.5, L = 300 with
              n = 12000 points (dx = 0.025, dt = dx^2/8 = 7.8125e-5)
  desk        same physics on n = 4096 points, for CI-speed runs

A config file starts from scratch unless --preset is also given, in which
case its sections override the preset's values key by key.
"""

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..nls import Grid, IntegratorConfig
from ..reduction import ScalingParams
from ..spectrum import Background, StructuredCoupling, SymmetricCoupling

__all__ = ["ConfigError", "RunConfig", "PRESET_NAMES", "preset_values",
           "resolve_config", "config_echo_lines"]


class ConfigError(ValueError):
    """A configuration value violates a module precondition."""


@dataclass(frozen=True, eq=False)
class RunConfig:
    name: str
    coupling: object            # StructuredCoupling | SymmetricCoupling
    bg: Background
    scaling: ScalingParams
    grid: Grid
    dt: float | None            # None -> dx^2 m / (8 hbar)
    scheme: str
    boundary: str
    branch: int
    snapshot_times: tuple

    def resolved_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        return self.grid.dx**2 * self.bg.mass / (8.0 * self.bg.hbar)

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.resolved_dt(), scheme=self.scheme,
                                boundary=self.boundary)

    def with_branch(self, branch: int) -> "RunConfig":
        return replace(self, branch=branch)

    def matches_paper_sec5(self) -> bool:
        """True when the physical parameters equal the reference experiment's."""
        c = self.coupling
        return (
            isinstance(c, StructuredCoupling)
            and c.n == 2
            and np.allclose(c.g, [1.0, 1.0], rtol=0, atol=1e-12)
            and abs(c.h - 0.5) <= 1e-12
            and np.allclose(self.bg.rho0, [1.0, 0.1], rtol=0, atol=1e-12)
            and abs(self.scaling.epsilon - 0.2) <= 1e-12
            and abs(self.scaling.soliton_speed - 2.5) <= 1e-12
            and abs(self.bg.mass - 1.0) <= 1e-12
            and abs(self.bg.hbar - 1.0) <= 1e-12
        )


_SEC5_VALUES = {
    ("coupling", "form"): "structured_gh",
    ("coupling", "g"): "1.0, 1.0",
    ("coupling", "h"): "0.5",
    ("background", "rho0"): "1.0, 0.1",
    ("background", "mass"): "1.0",
    ("background", "hbar"): "1.0",
    ("scaling", "epsilon"): "0.2",
    ("scaling", "soliton_speed"): "2.5",
    ("grid", "x_min"): "-150.0",
    ("grid", "x_max"): "150.0",
    ("grid", "n_points"): "12000",
    ("integrator", "dt"): "auto",
    ("integrator", "scheme"): "leapfrog",
    ("integrator", "boundary"): "periodic",
    ("run", "branch"): "1",
    ("run", "snapshot_times"): "0.0, 10.0, 20.0, 30.0",
}

PRESET_NAMES = ("paper-sec5", "desk")


def preset_values(name: str) -> dict:
    if name == "paper-sec5":
        return dict(_SEC5_VALUES)
    if name == "desk":
        values = dict(_SEC5_VALUES)
        values[("grid", "n_points")] = "4096"
        return values
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _parse_floats(text: str) -> list:
    items = [p for p in text.replace(",", " ").split() if p]
    try:
        return [float(p) for p in items]
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r.strip() for r in text.split(";") if r.strip()]
    return np.array([_parse_floats(r) for r in rows])


def _read_config_file(path) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    values = {}
    for section in parser.sections():
        for key, val in parser.items(section):
            values[(section.lower(), key.lower())] = val.strip()
    return values


def resolve_config(preset: str | None = None, config_path=None,
                   branch: int | None = None) -> RunConfig:
    """Build and validate a RunConfig from a preset, a file, or both."""
    if preset is None and config_path is None:
        raise ConfigError("either a preset or a config file is required")
    values = preset_values(preset) if preset else {}
    name = preset or "custom"
    if config_path is not None:
        values.update(_read_config_file(config_path))
        name = f"{name}+{Path(config_path).name}" if preset else Path(config_path).stem

    def need(section, key):
        try:
            return values[(section, key)]
        except KeyError:
            raise ConfigError(f"missing [{section}] {key}") from None

    def get(section, key, default):
        return values.get((section, key), default)

    try:
        form = get("coupling", "form", "structured_gh").lower()
        if form == "structured_gh":
            coupling = StructuredCoupling(
                g=np.array(_parse_floats(need("coupling", "g"))),
                h=float(need("coupling", "h")),
            )
        elif form == "general_symmetric":
            coupling = SymmetricCoupling(alpha=_parse_matrix(need("coupling", "alpha")))
        else:
            raise ConfigError(f"unknown coupling form {form!r}")
        bg = Background(
            rho0=np.array(_parse_floats(need("background", "rho0"))),
            mass=float(get("background", "mass", "1.0")),
            hbar=float(get("background", "hbar", "1.0")),
        )
        scaling = ScalingParams(
            epsilon=float(need("scaling", "epsilon")),
            soliton_speed=float(need("scaling", "soliton_speed")),
        )
        grid = Grid(
            x_min=float(need("grid", "x_min")),
            x_max=float(need("grid", "x_max")),
            n=int(need("grid", "n_points")),
        )
        dt_text = get("integrator", "dt", "auto").lower()
        dt = None if dt_text == "auto" else float(dt_text)
        cfg = RunConfig(
            name=name,
            coupling=coupling,
            bg=bg,
            scaling=scaling,
            grid=grid,
            dt=dt,
            scheme=get("integrator", "scheme", "leapfrog").lower(),
            boundary=get("integrator", "boundary", "periodic").lower(),
            branch=int(get("run", "branch", "1")),
            snapshot_times=tuple(_parse_floats(get("run", "snapshot_times", "0.0"))),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if branch is not None:
        cfg = cfg.with_branch(branch)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    n = cfg.coupling.n
    if cfg.bg.n != n:
        raise ConfigError(
            f"coupling has {n} components but rho0 has {cfg.bg.n}"
        )
    if not 1 <= abs(cfg.branch) <= n or cfg.branch == 0:
        raise ConfigError(f"branch must be in 1..{n} (with optional sign)")
    dt = cfg.resolved_dt()
    limit = cfg.grid.dx**2 * cfg.bg.mass / (4.0 * cfg.bg.hbar)
    if cfg.scheme == "leapfrog" and dt > limit * (1 + 1e-12):
        raise ConfigError(
            f"dt = {dt:g} violates the leapfrog stability bound "
            f"dx^2 m/(4 hbar) = {limit:g}"
        )
    if cfg.scheme not in ("leapfrog", "splitstep"):
        raise ConfigError(f"unknown scheme {cfg.scheme!r}")
    if cfg.boundary not in ("periodic", "clamped"):
        raise ConfigError(f"unknown boundary {cfg.boundary!r}")
    if any(t < 0 for t in cfg.snapshot_times):
        raise ConfigError("snapshot times must be non-negative")
    if len(cfg.snapshot_times) == 0:
        raise ConfigError("at least one snapshot time is required")


def config_echo_lines(cfg: RunConfig) -> list:
    """Deterministic key = value lines describing the resolved config."""
    lines = [f"config_name = {cfg.name}"]
    c = cfg.coupling
    if isinstance(c, StructuredCoupling):
        lines.append("coupling_form = structured_gh")
        lines.append("g = " + ", ".join(f"{v:.17g}" for v in c.g))
        lines.append(f"h = {c.h:.17g}")
    else:
        lines.append("coupling_form = general_symmetric")
        lines.append("alpha = " + "; ".join(
            " ".join(f"{v:.17g}" for v in row) for row in c.matrix()
        ))
    lines.append("rho0 = " + ", ".join(f"{v:.17g}" for v in cfg.bg.rho0))
    lines.append(f"mass = {cfg.bg.mass:.17g}")
    lines.append(f"hbar = {cfg.bg.hbar:.17g}")
    lines.append(f"epsilon = {cfg.scaling.epsilon:.17g}")
    lines.append(f"soliton_speed = {cfg.scaling.soliton_speed:.17g}")
    lines.append(f"x_min = {cfg.grid.x_min:.17g}")
    lines.append(f"x_max = {cfg.grid.x_max:.17g}")
    lines.append(f"n_points = {cfg.grid.n}")
    lines.append(f"dt = {cfg.resolved_dt():.17g}")
    lines.append(f"scheme = {cfg.scheme}")
    lines.append(f"boundary = {cfg.boundary}")
    lines.append(f"branch = {cfg.branch}")
    lines.append("snapshot_times = " + ", ".join(f"{t:.17g}" for t in cfg.snapshot_times))
    return lines
