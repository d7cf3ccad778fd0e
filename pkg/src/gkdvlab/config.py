"""Plain-text scenario files: named sections of key = value pairs.

Grammar (diff-friendly, order-insensitive within a section):

    # comments and blank lines are ignored
    name = <identifier>              (top level, before any section)
    [model]      m, lambda, epsilon
    [potential]  family, steepness, a_minus, a_plus
    [grid]       x_min, x_max, n, boundary_tol
    [time]       dt, t_start, t_end, snapshot_dt
    [analysis]   a0, x0 (comma list), core_offset
    [sweep]      epsilons (comma list), run_pde
    [output]     directory

Time endpoints accept either a float or the symbolic form "<float>*T_eps",
resolved against T_eps = eps^{-1.01} / (1 - lambda).  Unknown sections or keys
and duplicate keys are rejected with the offending line.
"""

from __future__ import annotations

import hashlib
import re
import warnings
from dataclasses import dataclass, field

from .adiabatic import t_epsilon
from .potential import PotentialSpec, make_potential
from .soliton import Grid1D, ModelConstants


class ConfigError(ValueError):
    pass


_DEFAULTS = {
    "model": {"m": "3", "lambda": "0.1", "epsilon": "0.05"},
    "potential": {"family": "tanh", "steepness": "1.0", "a_minus": "1.0", "a_plus": "2.0"},
    "grid": {"x_min": "-160.0", "x_max": "224.0", "n": "16384", "boundary_tol": "1e-10"},
    "time": {"dt": "0.002", "t_start": "-1*T_eps", "t_end": "1*T_eps", "snapshot_dt": "0.5"},
    "analysis": {"a0": "10.0", "x0": "5,10,20", "core_offset": "10.0"},
    "sweep": {"epsilons": "0.1,0.05,0.025", "run_pde": "false"},
    "output": {"directory": "runs/out"},
}

_TIME_EXPR = re.compile(r"^\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\*\s*T_eps\s*$")


@dataclass
class Scenario:
    """Fully validated experiment description."""

    name: str
    raw: dict = field(repr=False)
    constants: ModelConstants = field(repr=False)
    potential: PotentialSpec = field(repr=False)
    epsilon: float = 0.05
    grid: Grid1D = field(default=None, repr=False)
    boundary_tol: float = 1e-10
    dt: float = 0.002
    t_start: float = 0.0
    t_end: float = 0.0
    snapshot_dt: float = 0.5
    a0: float = 10.0
    x0_values: tuple = (5.0, 10.0, 20.0)
    core_offset: float = 10.0
    sweep_epsilons: tuple = ()
    sweep_run_pde: bool = False
    out_dir: str = "runs/out"

    def render(self) -> str:
        """Canonical text form; parse(render(.)) reproduces this scenario exactly."""
        lines = [f"name = {self.name}"]
        for section in _DEFAULTS:
            lines.append("")
            lines.append(f"[{section}]")
            for key in _DEFAULTS[section]:
                lines.append(f"{key} = {self.raw[section][key]}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()

    def t_eps(self) -> float:
        return t_epsilon(self.constants.lam, self.epsilon)


def _tokenize(text: str):
    """Yield (line_no, kind, payload) with kind in {'section', 'pair'}."""
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"line {line_no}: unterminated section header")
            yield line_no, "section", stripped[1:-1].strip()
        elif "=" in stripped:
            key, _, value = stripped.partition("=")
            yield line_no, "pair", (key.strip(), value.strip())
        else:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError(f"line {line_no}, column {col}: expected 'key = value'")


def _parse_float(section, key, value, line_no):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {line_no}: [{section}] {key} = {value!r} is not a number")


def parse_config_text(text: str, *, allow_out_of_theory: bool = False) -> Scenario:
    raw = {section: dict(defaults) for section, defaults in _DEFAULTS.items()}
    name = "scenario"
    section = None
    seen: set = set()
    lines_of: dict = {}
    for line_no, kind, payload in _tokenize(text):
        if kind == "section":
            if payload not in raw:
                raise ConfigError(f"line {line_no}: unknown section [{payload}]")
            section = payload
            continue
        key, value = payload
        if section is None:
            if key != "name":
                raise ConfigError(f"line {line_no}: unknown top-level key '{key}'")
            if ("", "name") in seen:
                raise ConfigError(f"line {line_no}: duplicate key 'name'")
            seen.add(("", "name"))
            name = value
            continue
        if key not in raw[section]:
            raise ConfigError(f"line {line_no}: unknown key '{key}' in [{section}]")
        if (section, key) in seen:
            raise ConfigError(
                f"line {line_no}: duplicate key '{key}' in [{section}] "
                f"(first set on line {lines_of[(section, key)]})")
        seen.add((section, key))
        lines_of[(section, key)] = line_no
        raw[section][key] = value

    return _build_scenario(name, raw, allow_out_of_theory=allow_out_of_theory)


def parse_config(path, *, allow_out_of_theory: bool = False) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), allow_out_of_theory=allow_out_of_theory)


def _build_scenario(name, raw, *, allow_out_of_theory: bool) -> Scenario:
    model = raw["model"]
    m = int(_parse_float("model", "m", model["m"], 0))
    lam = _parse_float("model", "lambda", model["lambda"], 0)
    epsilon = _parse_float("model", "epsilon", model["epsilon"], 0)
    if epsilon <= 0:
        raise ConfigError("[model] epsilon must be positive")
    try:
        constants = ModelConstants(m, lam)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}")
    if lam > constants.lambda0 + 1e-15:
        if not allow_out_of_theory:
            raise ConfigError(
                f"[model] lambda = {lam} exceeds lambda0 = {constants.lambda0:.6g} "
                f"for m = {m}; pass --allow-out-of-theory to run anyway")
        warnings.warn(f"lambda = {lam} is outside [0, lambda0]; out-of-theory run",
                      stacklevel=2)

    pot = raw["potential"]
    potential = make_potential(pot["family"],
                               _parse_float("potential", "steepness", pot["steepness"], 0),
                               _parse_float("potential", "a_minus", pot["a_minus"], 0),
                               _parse_float("potential", "a_plus", pot["a_plus"], 0))

    gridsec = raw["grid"]
    grid = Grid1D(_parse_float("grid", "x_min", gridsec["x_min"], 0),
                  _parse_float("grid", "x_max", gridsec["x_max"], 0),
                  int(_parse_float("grid", "n", gridsec["n"], 0)))
    boundary_tol = _parse_float("grid", "boundary_tol", gridsec["boundary_tol"], 0)
    if boundary_tol <= 0:
        raise ConfigError("[grid] boundary_tol must be positive")

    lam_for_te = min(lam, 0.999)
    te = t_epsilon(lam_for_te, epsilon)

    def resolve_time(value):
        match = _TIME_EXPR.match(value)
        if match:
            return float(match.group(1)) * te
        return float(value)

    timesec = raw["time"]
    dt = _parse_float("time", "dt", timesec["dt"], 0)
    try:
        t_start = resolve_time(timesec["t_start"])
        t_end = resolve_time(timesec["t_end"])
    except ValueError:
        raise ConfigError("[time] t_start/t_end must be a float or '<float>*T_eps'")
    if dt <= 0:
        raise ConfigError("[time] dt must be positive")
    if t_end < t_start:
        raise ConfigError("[time] t_end precedes t_start")

    ana = raw["analysis"]
    x0_values = tuple(float(v) for v in ana["x0"].split(","))
    sweep = raw["sweep"]
    sweep_eps = tuple(float(v) for v in sweep["epsilons"].split(","))
    run_pde = sweep["run_pde"].strip().lower() in ("true", "1", "yes")

    return Scenario(
        name=name, raw=raw, constants=constants, potential=potential, epsilon=epsilon,
        grid=grid, boundary_tol=boundary_tol, dt=dt, t_start=t_start, t_end=t_end,
        snapshot_dt=_parse_float("time", "snapshot_dt", timesec["snapshot_dt"], 0),
        a0=_parse_float("analysis", "a0", ana["a0"], 0),
        x0_values=x0_values,
        core_offset=_parse_float("analysis", "core_offset", ana["core_offset"], 0),
        sweep_epsilons=sweep_eps, sweep_run_pde=run_pde,
        out_dir=raw["output"]["directory"],
    )
