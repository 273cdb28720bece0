"""Run configuration: parsing, defaults and the canonical echo.

Configuration files are TOML.  The resolved configuration is echoed as JSON
into every output artifact, and that JSON echo is itself accepted as a
configuration file, so any artifact can be regenerated from its header.
Unknown keys are errors.  See README.md for the full key table.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .maxwell_fdtd import BOUNDARIES, AbsorberSpec, GridConfig, PulseSpec, SourceSpec
from .probability_rules import RULE_KINDS, SHAPES, ProbabilityRule, RuleError

COMMANDS = ("coherent", "detect", "fdtd", "audit", "sweep")
FORMATS = ("csv", "json", "both")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = ""
        if key:
            where += f"key '{key}'"
        if line:
            where += f"{' ' if where else ''}(line {line})"
        super().__init__(f"{where}: {message}" if where else message)
        self.key = key
        self.line = line
        self.detail = message


@dataclass(frozen=True)
class RunConfig:
    command: str = "coherent"
    scenario: str = "run"
    alpha: complex = 2.0
    rule: ProbabilityRule = field(default_factory=ProbabilityRule.born)
    n_max: int | None = None
    n_samples: int = 100_000
    seed: int = 0
    hbar_omega: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    region: tuple[float, float] | None = None
    sweep_values: tuple[float, ...] = (-0.1, -0.05, 0.0, 0.05, 0.1)
    sweep_workers: int = 1
    out_dir: str = "."
    format: str = "both"
    trunc_tol: float = 1e-10
    closure_tol: float = 1e-3
    threshold: float = 3.0

    def to_dict(self) -> dict:
        g = self.grid
        return {
            "command": self.command,
            "scenario": self.scenario,
            "alpha": {"re": self.alpha.real, "im": self.alpha.imag},
            "rule": self.rule.to_dict(),
            "n_max": self.n_max,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "hbar_omega": self.hbar_omega,
            "grid": {
                "cells": g.cells,
                "length": g.length,
                "duration": g.duration,
                "courant": g.courant,
                "c": g.c,
                "boundary": g.boundary,
                "absorber": None if g.absorber is None else vars(g.absorber).copy(),
                "pulse": None if g.pulse is None else vars(g.pulse).copy(),
                "source": None if g.source is None else vars(g.source).copy(),
            },
            "region": None if self.region is None else {"start": self.region[0], "stop": self.region[1]},
            "sweep": {"values": list(self.sweep_values), "workers": self.sweep_workers},
            # the destination directory is not part of the experiment
            "output": {"format": self.format},
            "tolerances": {"trunc": self.trunc_tol, "closure": self.closure_tol, "threshold": self.threshold},
        }

    def echo(self) -> str:
        return dumps(self.to_dict())


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- parsing ---------------------------------------------------------------

_TOP = {"command", "scenario", "alpha", "rule", "n_max", "n_samples", "seed", "hbar_omega",
        "grid", "region", "sweep", "output", "tolerances"}
_TABLES = {
    "alpha": {"re", "im"},
    "rule": {"kind", "epsilon", "delta", "shape"},
    "grid": {"cells", "length", "duration", "courant", "c", "boundary", "absorber", "pulse", "source"},
    "region": {"start", "stop"},
    "sweep": {"values", "workers"},
    "output": {"dir", "format"},
    "tolerances": {"trunc", "closure", "threshold"},
    "grid.absorber": {"enabled", "start", "stop", "sigma_max", "grading"},
    "grid.pulse": {"enabled", "center", "width", "amplitude", "wavelength", "direction", "shape"},
    "grid.source": {"enabled", "position", "amplitude", "t0", "duration"},
}


class _Reader:
    """Typed access to the raw mapping with key/line-aware diagnostics."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line_of(self, dotted: str) -> int | None:
        leaf = re.escape(dotted.rsplit(".", 1)[-1])
        pats = [re.compile(rf'^\s*"?{leaf}"?\s*[=:]'), re.compile(rf"^\s*\[\s*{re.escape(dotted)}\s*\]")]
        for i, line in enumerate(self.lines, 1):
            if any(p.search(line) for p in pats):
                return i
        return None

    def fail(self, dotted: str, message: str):
        raise ConfigError(message, dotted, self.line_of(dotted))

    def check_keys(self, table: dict, path: str, allowed: set):
        for k in table:
            if k not in allowed:
                name = f"{path}.{k}" if path else k
                self.fail(name, "unknown key")

    def number(self, table, key, path, default, *, integer=False, positive=False, nonneg=False):
        dotted = f"{path}.{key}" if path else key
        if key not in table:
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(dotted, f"expected a number, got {v!r}")
        if integer and not (isinstance(v, int) or float(v).is_integer()):
            self.fail(dotted, f"expected an integer, got {v!r}")
        v = int(v) if integer else float(v)
        if not math.isfinite(v):
            self.fail(dotted, "must be finite")
        if positive and not v > 0:
            self.fail(dotted, f"must be positive, got {v!r}")
        if nonneg and v < 0:
            self.fail(dotted, f"must be non-negative, got {v!r}")
        return v

    def choice(self, table, key, path, default, options):
        dotted = f"{path}.{key}" if path else key
        if key not in table:
            return default
        v = table[key]
        if v not in options:
            self.fail(dotted, f"expected one of {tuple(options)}, got {v!r}")
        return v

    def table(self, raw, key, path=""):
        dotted = f"{path}.{key}" if path else key
        v = raw.get(key, {})
        if v is None:
            return None
        if not isinstance(v, dict):
            self.fail(dotted, "expected a table")
        self.check_keys(v, dotted, _TABLES[dotted])
        return v


def _load(text: str) -> dict:
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ConfigError(f"malformed TOML: {exc}", line=int(m.group(1)) if m else None) from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    return raw


def _optional_spec(rd: _Reader, grid_raw: dict, name: str, cls, spec: dict, default_on: bool):
    """Sub-table of ``grid``; ``enabled = false`` or JSON null disables it."""
    if name in grid_raw and grid_raw[name] is None:
        return None
    t = rd.table(grid_raw, name, "grid")
    path = f"grid.{name}"
    enabled = t.get("enabled", default_on if not t else True)
    if not isinstance(enabled, bool):
        rd.fail(f"{path}.enabled", "expected true or false")
    if not enabled:
        return None
    base = cls()
    kwargs = {}
    for key, kind in spec.items():
        default = getattr(base, key)
        if kind == "str":
            kwargs[key] = rd.choice(t, key, path, default, ("gaussian", "bump"))
        elif kind == "dir":
            kwargs[key] = rd.choice(t, key, path, default, (-1, 0, 1))
        else:
            kwargs[key] = rd.number(t, key, path, default, **kind)
    return cls(**kwargs)


def parse_config(text: str = "", command: str | None = None, seed: int | None = None) -> RunConfig:
    """Validated :class:`RunConfig` from TOML (or echoed JSON) text.

    ``command`` and ``seed`` override the file, as the CLI flags do.
    """
    rd = _Reader(text)
    raw = _load(text) if text.strip() else {}
    rd.check_keys(raw, "", _TOP)
    d = RunConfig()

    cmd = command if command is not None else raw.get("command", d.command)
    if cmd not in COMMANDS:
        rd.fail("command", f"expected one of {COMMANDS}, got {cmd!r}")
    scenario = raw.get("scenario", d.scenario)
    if not isinstance(scenario, str):
        rd.fail("scenario", "expected a string")

    a = rd.table(raw, "alpha")
    if a is None:
        rd.fail("alpha", "alpha is required")
    alpha = complex(rd.number(a, "re", "alpha", d.alpha.real), rd.number(a, "im", "alpha", d.alpha.imag))

    r = rd.table(raw, "rule")
    if r is None:
        rd.fail("rule", "rule is required")
    kind = rd.choice(r, "kind", "rule", "born", RULE_KINDS)
    try:
        rule = ProbabilityRule(
            kind,
            epsilon=rd.number(r, "epsilon", "rule", 0.0),
            delta=rd.number(r, "delta", "rule", 0.0),
            shape=rd.choice(r, "shape", "rule", "sign", tuple(SHAPES)),
        )
    except RuleError as exc:
        key = "rule.epsilon" if "epsilon" in str(exc) else "rule"
        rd.fail(key, str(exc))

    n_max = raw.get("n_max")
    if n_max is not None:
        n_max = rd.number(raw, "n_max", "", None, integer=True, nonneg=True)
    n_samples = rd.number(raw, "n_samples", "", d.n_samples, integer=True, positive=True)
    seed_v = rd.number(raw, "seed", "", d.seed, integer=True, nonneg=True)
    if seed is not None:
        if seed < 0:
            raise ConfigError("must be non-negative", "seed")
        seed_v = int(seed)
    hbar_omega = rd.number(raw, "hbar_omega", "", d.hbar_omega, positive=True)

    g = rd.table(raw, "grid")
    if g is None:
        rd.fail("grid", "grid is required")
    gd = GridConfig()
    cells = rd.number(g, "cells", "grid", gd.cells, integer=True)
    if cells < 16:
        rd.fail("grid.cells", f"need at least 16 cells, got {cells}")
    courant = rd.number(g, "courant", "grid", gd.courant)
    if not 0.0 < courant <= 1.0:
        rd.fail("grid.courant", f"Courant number must lie in (0, 1], got {courant!r}")
    pos = {"positive": True}
    nonneg = {"nonneg": True}
    plain: dict = {}
    absorber = _optional_spec(rd, g, "absorber", AbsorberSpec,
                              {"start": nonneg, "stop": pos, "sigma_max": nonneg, "grading": nonneg}, True)
    if absorber is not None and not 0.0 <= absorber.start < absorber.stop <= 1.0:
        rd.fail("grid.absorber", "absorber needs 0 <= start < stop <= 1")
    pulse = _optional_spec(rd, g, "pulse", PulseSpec,
                           {"center": plain, "width": pos, "amplitude": plain, "wavelength": nonneg,
                            "direction": "dir", "shape": "str"}, True)
    source = _optional_spec(rd, g, "source", SourceSpec,
                            {"position": plain, "amplitude": plain, "t0": plain, "duration": pos}, False)
    grid = GridConfig(
        cells=cells,
        length=rd.number(g, "length", "grid", gd.length, positive=True),
        duration=rd.number(g, "duration", "grid", gd.duration, positive=True),
        courant=courant,
        c=rd.number(g, "c", "grid", gd.c, positive=True),
        boundary=rd.choice(g, "boundary", "grid", gd.boundary, BOUNDARIES),
        absorber=absorber,
        pulse=pulse,
        source=source,
    )

    region = None
    if raw.get("region") is not None:
        rg = rd.table(raw, "region")
        region = (rd.number(rg, "start", "region", 0.0), rd.number(rg, "stop", "region", 1.0))
        if not 0.0 <= region[0] < region[1] <= 1.0:
            rd.fail("region", "region needs 0 <= start < stop <= 1 (fractions of the domain)")

    sw = rd.table(raw, "sweep")
    values = sw.get("values", list(d.sweep_values))
    if not isinstance(values, list) or not values or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values
    ):
        rd.fail("sweep.values", "expected a non-empty list of finite numbers")
    workers = rd.number(sw, "workers", "sweep", d.sweep_workers, integer=True, positive=True)

    out = rd.table(raw, "output")
    out_dir = out.get("dir", d.out_dir)
    if not isinstance(out_dir, str):
        rd.fail("output.dir", "expected a string")
    fmt = rd.choice(out, "format", "output", d.format, FORMATS)

    tol = rd.table(raw, "tolerances")
    return RunConfig(
        command=cmd,
        scenario=scenario,
        alpha=alpha,
        rule=rule,
        n_max=n_max,
        n_samples=n_samples,
        seed=seed_v,
        hbar_omega=hbar_omega,
        grid=grid,
        region=region,
        sweep_values=tuple(float(v) for v in values),
        sweep_workers=workers,
        out_dir=out_dir,
        format=fmt,
        trunc_tol=rd.number(tol, "trunc", "tolerances", d.trunc_tol, positive=True),
        closure_tol=rd.number(tol, "closure", "tolerances", d.closure_tol, positive=True),
        threshold=rd.number(tol, "threshold", "tolerances", d.threshold, positive=True),
    )
