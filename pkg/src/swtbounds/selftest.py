"""Fast invariant suite behind ``swtbounds selftest`` (a few seconds, no PXP runs)."""
from __future__ import annotations

import math
import warnings

import numpy as np

from . import bounds as B
from .closed import epsilon_closed, epsilon_decomposed, epsilon_single_state
from .lattice import SX
from .linalg import op_norm
from .opensys import (build_example1, build_example2, dfs_projector, epsilon_open,
                      evolve_open, evolve_open_exact, saturation_value)
from .rng import closed_ensemble, open_ensemble
from .swt import build_swt, generator_residual


def _crossover():
    x = B.slope_crossover()
    return 0.1882 <= x <= 0.1892, f"x = {x:.6f}"


def _closed_ensemble():
    worst = 0.0
    for inst in closed_ensemble(12, seed=99):
        vn = op_norm(inst.v)
        tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable,
                            np.linspace(0, 20 / vn, 20))
        for name in ("b1", "b2"):
            if name in tr.bounds:
                worst = max(worst, float(np.max(tr.epsilon / tr.bounds[name])))
    return worst <= 1.0, f"max eps/bound = {worst:.3f}"


def _swt_residuals():
    worst = 0.0
    for inst in closed_ensemble(12, seed=99):
        for variant in ("closed_H0", "closed_H1"):
            res = build_swt(inst.h0, inst.v, inst.split, variant)
            worst = max(worst, generator_residual(res, inst.v, inst.split) / op_norm(inst.v))
    return worst <= 1e-10, f"max relative residual = {worst:.2e}"


def _dual_route():
    worst = 0.0
    for inst in closed_ensemble(6, seed=5):
        ts = np.array([0.1, 1.0, 5.0]) / op_norm(inst.v)
        a = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, ts).epsilon
        b = epsilon_decomposed(inst.h0, inst.v, inst.split, inst.observable, ts)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst <= 1e-8, f"max route gap = {worst:.2e}"


def _single_state():
    h0 = np.diag([10.0, 0.0]).astype(complex)
    worst = 0.0
    for omega in (0.1, 0.5, 1.0):
        tr = epsilon_single_state(h0, omega / 2 * SX, 1, SX, np.linspace(0, 100, 2001))
        worst = max(worst, float(np.max(tr.epsilon / tr.bounds["const_bound"])))
    return worst <= 1.0, f"max eps/bound = {worst:.3f}"


def _many_body_routes():
    worst = 0.0
    for kappa in (0.3, 1.0, 2.0):
        p = B.BoundParams(v_norm=1.0, gap=10.0, w=3, u=3, velocity=5.0, kappa=kappa,
                          x_size=2, r_x=1.0, l0=1.0)
        for t in (0.0, 0.5, 3.0):
            a, b = B.bound_many_body(p, t), B.bound_many_body_1d_explicit(p, t)
            worst = max(worst, abs(a - b) / abs(b))
    return worst <= 1e-9, f"max relative gap = {worst:.2e}"


def _rk4_oracle():
    worst = 0.0
    for m, o in open_ensemble(5, seed=11):
        ts = [0.0, 0.7, 2.0]
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            a = evolve_open(m, o, ts)
        b = evolve_open_exact(m, o, ts)
        worst = max(worst, max(op_norm(x - y) for x, y in zip(a, b)))
    return worst <= 1e-7, f"max |RK4 - expm| = {worst:.2e}"


def _zeno():
    delta0, omega = 1.0, 0.05
    m, o = build_example1(delta0, omega)
    tr = epsilon_open(m, o, np.linspace(0, 40, 401))
    target = 2 * omega * delta0 / (2 * delta0 ** 2 + omega ** 2)
    sat = saturation_value(tr)
    ok = abs(sat / target - 1) <= 0.02 and tr.violations("bound_exact") == 0
    return ok, f"saturation {sat:.6f} vs {target:.6f}"


def _open_ensemble():
    bad = 0
    for m, o in open_ensemble(10, seed=3):
        dfs_projector(m)
        tr = epsilon_open(m, o, np.linspace(0, 5 / op_norm(m.V), 11))
        unit = evolve_open(m, np.eye(m.dim), [1.0])[0]
        bad += tr.violations("bound_exact")
        bad += op_norm(unit - np.eye(m.dim)) > 1e-8
        bad += tr.metadata["max_norm"] > 1 + 1e-6
    return bad == 0, f"{bad} violations"


def _example2_bound():
    m, o = build_example2(1.0, 0.05)
    tr = epsilon_open(m, o, np.linspace(0, 100, 101))
    return tr.violations("bound_exact") == 0, f"max eps = {tr.epsilon.max():.4f}"


CHECKS = [
    ("slope crossover", _crossover),
    ("closed bounds on random instances", _closed_ensemble),
    ("generator equation residual", _swt_residuals),
    ("direct vs factorised error", _dual_route),
    ("single-state constant bound", _single_state),
    ("many-body polynomial routes", _many_body_routes),
    ("RK4 vs superoperator exponential", _rk4_oracle),
    ("driven atom saturation", _zeno),
    ("open bound, unitality, contraction", _open_ensemble),
    ("two-atom open bound", _example2_bound),
]


def run_all(verbose: bool = False) -> bool:
    all_ok = True
    for name, check in CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
