"""Config-driven experiments that write CSV tables.

A config is a flat UTF-8 text file of ``key = value`` lines; ``#`` starts a
comment. ``scenario`` is required, every other key has a per-scenario default
or is listed as required in :data:`SCENARIOS`.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds as B
from .closed import (commutator_growth, epsilon_closed, epsilon_single_state, front_fit,
                     light_cone)
from .errors import ConfigError, SwtBoundsError
from .lattice import SX, SY, build_pxp, local_term
from .linalg import eig_hermitian, op_norm
from .opensys import build_example1, build_example2, epsilon_open, saturation_value, slope_fit
from .rng import random_closed_instance

__all__ = ["OUTPUT_ENV", "ScenarioConfig", "ScenarioResult", "SCENARIOS",
           "parse_config", "load_config", "validate_config", "run_scenario",
           "write_csv", "sweep", "format_number"]

OUTPUT_ENV = "SWTBOUNDS_OUTPUT_DIR"


@dataclass(frozen=True)
class Key:
    kind: type
    default: object = None
    positive: bool = False
    minimum: float | None = None

    @property
    def required(self) -> bool:
        return self.default is None


_T = Key(float, positive=True)

SCENARIOS: dict[str, dict[str, Key]] = {
    "closed-bound": {
        "seed": Key(int, 1), "dim": Key(int, 8, minimum=2), "rank": Key(int, 1, minimum=1),
        "ratio": Key(float, 0.1, positive=True), "t_max": Key(float, 20.0, positive=True),
        "n_times": Key(int, 50, minimum=2),
    },
    "single-state": {
        "delta0": Key(float, 10.0, positive=True), "omega": Key(float, positive=True),
        "t_max": Key(float, 100.0, positive=True), "dt": Key(float, 0.01, positive=True),
    },
    "pxp-lightcone": {
        "N": Key(int, minimum=3), "delta0": Key(float, positive=True),
        "omega": Key(float, positive=True), "t_max": Key(float, positive=True),
        "dt": Key(float, positive=True), "threshold": Key(float, 1.0, positive=True),
        "x_site": Key(int, 1, minimum=1),
    },
    "pxp-collapse": {
        "N": Key(int, minimum=2), "delta0": Key(float, positive=True),
        "omega": Key(float, positive=True), "x_site": Key(int, 1, minimum=1),
        "y_site": Key(int, 6, minimum=1), "scaled_t_max": Key(float, 2.0, positive=True),
        "n_times": Key(int, 41, minimum=2),
    },
    "zeno-example1": {
        "delta0": Key(float, 1.0, positive=True), "omega": Key(float, 0.05, positive=True),
        "t_max": Key(float, 40.0, positive=True), "dt": Key(float, 0.1, positive=True),
    },
    "zeno-example2": {
        "delta0": Key(float, 1.0, positive=True), "omega": Key(float, 0.05, positive=True),
        "t_max": Key(float, 400.0, positive=True), "dt": Key(float, 0.5, positive=True),
    },
    "bound-tables": {
        "x_min": Key(float, 0.01, positive=True), "x_max": Key(float, 0.45, positive=True),
        "n_points": Key(int, 45, minimum=2),
    },
}
COMMON = {"output": Key(str, ""), "output_dir": Key(str, "."), "seed": Key(int, 1)}


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict[str, str] = field(default_factory=dict)
    source: Path | None = None

    def with_value(self, key: str, value: str) -> "ScenarioConfig":
        params = dict(self.parameters)
        params[key] = str(value)
        return ScenarioConfig(self.scenario, params, self.source)

    def output_path(self, suffix: str = "") -> Path:
        name = self.parameters.get("output") or f"{self.scenario}.csv"
        base = os.environ.get(OUTPUT_ENV) or self.parameters.get("output_dir", ".")
        if self.source is not None and not os.path.isabs(base) and OUTPUT_ENV not in os.environ:
            base = self.source.parent / base
        path = Path(base) / name
        if suffix:
            path = path.with_name(f"{path.stem}{suffix}{path.suffix or '.csv'}")
        return path


@dataclass
class ScenarioResult:
    header: list[str]
    rows: list[tuple]
    metric_name: str
    metric: float
    extra_tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    curve: np.ndarray | None = None
    paths: list[Path] = field(default_factory=list)


def parse_config(text: str, source: Path | None = None) -> ScenarioConfig:
    params: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in params:
            raise ConfigError(f"duplicate key {key!r}", key=key)
        params[key] = value
    scenario = params.pop("scenario", None)
    if scenario is None:
        raise ConfigError("missing key 'scenario'", key="scenario")
    return ScenarioConfig(scenario, params, source)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path)


def _schema(cfg: ScenarioConfig) -> dict[str, Key]:
    return {**COMMON, **SCENARIOS[cfg.scenario]}


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Human-readable issues, each naming its key; empty when the config is runnable."""
    if cfg.scenario not in SCENARIOS:
        return [f"scenario: unknown value {cfg.scenario!r}; expected one of {sorted(SCENARIOS)}"]
    issues = []
    schema = _schema(cfg)
    for key in cfg.parameters:
        if key not in schema:
            issues.append(f"{key}: not a parameter of scenario {cfg.scenario}")
    for key, spec in schema.items():
        if key not in cfg.parameters:
            if spec.required:
                issues.append(f"{key}: required by scenario {cfg.scenario}")
            continue
        raw = cfg.parameters[key]
        try:
            value = spec.kind(raw)
        except ValueError:
            issues.append(f"{key}: cannot parse {raw!r} as {spec.kind.__name__}")
            continue
        if spec.kind is float and not math.isfinite(value):
            issues.append(f"{key}: must be finite")
        elif spec.positive and not value > 0:
            issues.append(f"{key}: must be positive, got {raw}")
        elif spec.minimum is not None and value < spec.minimum:
            issues.append(f"{key}: must be at least {spec.minimum}, got {raw}")
    if not issues:
        issues.extend(_cross_checks(cfg.scenario, _values(cfg)))
    return issues


def _cross_checks(name: str, p: dict) -> list[str]:
    out = []
    if name == "closed-bound":
        if p["rank"] >= p["dim"]:
            out.append("rank: must be smaller than dim")
        if p["ratio"] >= 0.5:
            out.append("ratio: must be below 0.5")
    if name in ("pxp-lightcone", "pxp-collapse"):
        if p["N"] > 12:
            out.append("N: dense simulation limited to N <= 12")
        if p["x_site"] > p["N"]:
            out.append("x_site: outside the chain")
        if name == "pxp-collapse" and p["y_site"] > p["N"]:
            out.append("y_site: outside the chain")
        if name == "pxp-lightcone" and not p["threshold"] < 2:
            out.append("threshold: must lie in (0, 2)")
    if name == "bound-tables" and not p["x_min"] < p["x_max"] < 0.5:
        out.append("x_max: need x_min < x_max < 0.5")
    return out


def _values(cfg: ScenarioConfig) -> dict:
    out = {}
    for key, spec in _schema(cfg).items():
        raw = cfg.parameters.get(key)
        out[key] = spec.default if raw is None else spec.kind(raw)
    return out


def _grid(t_max: float, dt: float) -> np.ndarray:
    n = int(round(t_max / dt))
    return np.linspace(0.0, n * dt, n + 1)


def _closed_bound(p):
    inst = random_closed_instance(p["seed"], dim_range=(p["dim"], p["dim"]),
                                  rank_range=(p["rank"], p["rank"]),
                                  ratio_range=(p["ratio"], p["ratio"]))
    v_norm = op_norm(inst.v)
    times = np.linspace(0.0, p["t_max"] / v_norm, p["n_times"])
    tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, times)
    b2 = tr.bounds.get("b2", np.full(len(times), math.nan))
    rows = list(zip(times, tr.epsilon, tr.bounds["b1"], b2, tr.bounds["asymptotic"]))
    return ScenarioResult(["t", "epsilon", "b1", "b2", "asymptotic"], rows,
                          "max_epsilon_over_b1", float(np.max(tr.epsilon / tr.bounds["b1"])),
                          metadata=tr.metadata)


def _two_level(delta0, omega):
    h0 = np.diag([delta0, 0.0]).astype(complex)  # |e> at index 0
    return h0, omega / 2 * SX


def _single_state(p):
    h0, v = _two_level(p["delta0"], p["omega"])
    times = _grid(p["t_max"], p["dt"])
    tr = epsilon_single_state(h0, v, 1, SX, times)
    bound = tr.bounds.get("const_bound", np.full(len(times), math.nan))
    rows = list(zip(times, tr.epsilon, bound))
    return ScenarioResult(["t", "epsilon", "const_bound"], rows, "max_epsilon_over_bound",
                          float(np.max(tr.epsilon) / bound[0]), metadata=tr.metadata)


def _pxp_hamiltonian(p):
    h0, v = build_pxp(p["N"], p["delta0"], p["omega"])
    return eig_hermitian(h0.total() + v.total())


def _pxp_lightcone(p):
    eig = _pxp_hamiltonian(p)
    n = p["N"]
    times = _grid(p["t_max"], p["dt"])
    grid = light_cone(eig, local_term(SY, (p["x_site"],), n), n, times)
    rows = [(t, int(j), grid.commutator_norms[k, j - 1])
            for k, t in enumerate(times) for j in grid.sites]
    fit = front_fit(grid, p["threshold"])
    table = (["site", "crossing_time"], sorted(fit.crossings.items()))
    return ScenarioResult(["t", "site", "commutator_norm"], rows, "velocity", fit.velocity,
                          extra_tables={"_crossings": table},
                          metadata={"r_squared": fit.r_squared, "intercept": fit.intercept})


def _pxp_collapse(p):
    eig = _pxp_hamiltonian(p)
    n = p["N"]
    v_star = p["omega"] / 2
    scaled = np.linspace(0.0, p["scaled_t_max"], p["n_times"])
    times = scaled / v_star
    curve = commutator_growth(eig, local_term(SY, (p["x_site"],), n),
                              local_term(SY, (p["y_site"],), n), times)
    rows = list(zip(times, scaled, curve))
    return ScenarioResult(["t", "scaled_time", "commutator_norm"], rows,
                          "max_commutator_norm", float(curve.max()), curve=curve,
                          metadata={"v_star": v_star})


def _zeno(builder):
    def run(p):
        m, o = builder(p["delta0"], p["omega"])
        times = _grid(p["t_max"], p["dt"])
        tr = epsilon_open(m, o, times)
        rows = list(zip(times, tr.epsilon, tr.bounds["bound_exact"],
                        tr.bounds["bound_asymptotic"]))
        if builder is build_example1:
            try:
                name, metric = "saturation", saturation_value(tr)
            except SwtBoundsError:
                name, metric = "saturation", math.nan
        else:
            lo, hi = 2 / p["omega"], min(20 / p["omega"], times[-1])
            name = "slope"
            metric = slope_fit(tr, (lo, hi)) if lo < hi else math.nan
        return ScenarioResult(["t", "epsilon", "bound_exact", "bound_asymptotic"], rows,
                              name, metric, metadata=tr.metadata)
    return run


def _bound_tables(p):
    xs = np.linspace(p["x_min"], p["x_max"], p["n_points"])
    rows = []
    for x in xs:
        bp = B.BoundParams(v_norm=x, gap=1.0)
        rows.append((x, B.slope_b1(bp), B.slope_b2(bp), B.intercept_b1(bp),
                     B.intercept_b2(bp)))
    return ScenarioResult(["x", "slope_b1", "slope_b2", "intercept_b1", "intercept_b2"],
                          rows, "slope_crossover", B.slope_crossover())


RUNNERS: dict[str, Callable[[dict], ScenarioResult]] = {
    "closed-bound": _closed_bound,
    "single-state": _single_state,
    "pxp-lightcone": _pxp_lightcone,
    "pxp-collapse": _pxp_collapse,
    "zeno-example1": _zeno(build_example1),
    "zeno-example2": _zeno(build_example2),
    "bound-tables": _bound_tables,
}


def format_number(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_number(x) for x in row) + "\n")
    return path


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> ScenarioResult:
    issues = validate_config(cfg)
    if issues:
        key = issues[0].split(":", 1)[0]
        raise ConfigError("; ".join(issues), key=key)
    params = _values(cfg)
    try:
        result = RUNNERS[cfg.scenario](params)
    except SwtBoundsError as exc:
        raise type(exc)(f"[{cfg.scenario}] {exc}") from exc
    if write:
        path = cfg.output_path()
        result.paths.append(write_csv(path, result.header, result.rows))
        for suffix, (header, rows) in result.extra_tables.items():
            result.paths.append(write_csv(cfg.output_path(suffix), header, rows))
    return result


def sweep(cfg: ScenarioConfig, axis: str, values: list[str]) -> tuple[Path, list[tuple]]:
    """Run ``cfg`` once per value of ``axis``; failures are recorded, not raised."""
    if cfg.scenario in SCENARIOS and axis not in _schema(cfg):
        raise ConfigError(f"sweep axis {axis!r} is not a parameter of {cfg.scenario}", key=axis)
    stem = Path(cfg.parameters.get("output") or f"{cfg.scenario}.csv").stem
    summary = []
    curves = {}
    metric_name = "metric"
    for value in values:
        member = cfg.with_value(axis, value).with_value("output", f"{stem}_{axis}={value}.csv")
        try:
            res = run_scenario(member)
        except (SwtBoundsError, ValueError, ArithmeticError) as exc:
            summary.append((value, "failed", math.nan, str(exc).replace(",", ";")))
            continue
        metric_name = res.metric_name
        if res.curve is not None:
            curves[value] = res.curve
        summary.append((value, "ok", res.metric, ""))
    header = [axis, "status", metric_name, "message"]
    if curves:
        # collapse: sup deviation of each curve from the first successful one
        ref = next(iter(curves.values()))
        header.insert(3, "sup_deviation")
        summary = [row[:3] + ((float(np.max(np.abs(curves[row[0]] - ref)))
                               if row[0] in curves else math.nan),) + row[3:]
                   for row in summary]
    path = cfg.with_value("output", f"{stem}_sweep_{axis}.csv").output_path()
    write_csv(path, header, summary)
    return path, summary
