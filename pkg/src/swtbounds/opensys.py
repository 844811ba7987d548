"""Markovian open systems in the Heisenberg picture.

Observables evolve under the adjoint Lindblad generator

    L+(O) = i[V, O] + sum_j (J_j^dag O J_j - {J_j^dag J_j, O}/2),

integrated with fixed-step RK4. The dissipative part defines the
"unperturbed" operator ``H0 = sum_j J_j^dag J_j / 2`` whose kernel is the
decoherence-free subspace (DFS), and ``V`` plays the role of the perturbation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .bounds import BoundParams, bound_open, bound_open_asymptotic
from .closed import ErrorTrace
from .errors import (DfsViolation, DimensionMismatch, InvalidParam, NoDfs,
                     NotSaturated, SingularS, StepTooLarge)
from .lattice import SMINUS, SX, SY, ID2
from .linalg import as_operator, dagger, eig_hermitian, evolve_conjugate, is_hermitian, op_norm
from .swt import BandSplit, split_from_projector

__all__ = [
    "LindbladModel", "OpenErrorTrace",
    "lindblad_adjoint_rhs", "adjoint_superoperator", "evolve_open", "evolve_open_exact",
    "max_step", "dfs_projector", "epsilon_open",
    "build_example1", "build_example2", "modified_jump",
    "single_jump_decay", "slope_fit", "saturation_value",
]

STEP_SAFETY = 0.05
DRIFT_WARN = 1e-4


@dataclass
class LindbladModel:
    V: np.ndarray
    jumps: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.V = as_operator(self.V)
        if not is_hermitian(self.V):
            raise InvalidParam("drive V must be Hermitian")
        d = self.V.shape[0]
        self.jumps = [as_operator(j) for j in self.jumps]
        for j in self.jumps:
            if j.shape != (d, d):
                raise DimensionMismatch(f"jump of shape {j.shape} for dimension {d}")

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    @property
    def K(self) -> np.ndarray:
        """sum_j J_j^dag J_j  (= 2 H0)."""
        out = np.zeros_like(self.V)
        for j in self.jumps:
            out += dagger(j) @ j
        return out

    @property
    def H0(self) -> np.ndarray:
        return self.K / 2

    @property
    def jump_weight(self) -> float:
        return float(sum(op_norm(j) ** 2 for j in self.jumps))

    @property
    def delta0(self) -> float:
        lam = np.linalg.eigvalsh(self.H0)
        tol = 1e-10 * max(abs(lam).max(), 1e-300)
        nz = lam[lam > tol]
        if len(nz) == 0:
            raise NoDfs("H0 has no nonzero eigenvalue")
        return float(nz.min())


class OpenErrorTrace(ErrorTrace):
    """ErrorTrace with ``bound_exact`` and ``bound_asymptotic`` columns."""


def lindblad_adjoint_rhs(m: LindbladModel, o) -> np.ndarray:
    o = np.asarray(o, dtype=complex)
    if o.shape != (m.dim, m.dim):
        raise DimensionMismatch(f"observable shape {o.shape} vs model dim {m.dim}")
    a = 1j * m.V - 0.5 * m.K
    out = a @ o + o @ dagger(a)
    for j in m.jumps:
        out += dagger(j) @ o @ j
    return out


def adjoint_superoperator(m: LindbladModel) -> np.ndarray:
    """Matrix of L+ acting on row-major ``vec(O)``: vec(A O B) = (A kron B^T) vec(O)."""
    d = m.dim
    eye = np.eye(d)
    a = 1j * m.V - 0.5 * m.K
    sup = np.kron(a, eye) + np.kron(eye, dagger(a).T)
    for j in m.jumps:
        sup += np.kron(dagger(j), j.T)
    return sup


def max_step(m: LindbladModel) -> float:
    """Default RK4 step 0.05 / (2||V|| + sum ||J||^2).

    The commutator i[V, .] has spectral radius up to 2||V||, hence the factor 2.
    """
    rate = 2 * op_norm(m.V) + m.jump_weight
    return STEP_SAFETY / rate if rate > 0 else math.inf


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise InvalidParam("times must be one-dimensional")
    if len(times) and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise InvalidParam("times must be non-negative and non-decreasing")
    return times


def evolve_open(m: LindbladModel, o, times: Sequence[float],
                step: float | None = None) -> list[np.ndarray]:
    """RK4 solution of dO/dt = L+(O) sampled at ``times``.

    Each interval between samples is split into equal steps no longer than
    ``step`` (default: the stability heuristic :func:`max_step`).
    """
    o = as_operator(o)
    if o.shape != (m.dim, m.dim):
        raise DimensionMismatch(f"observable shape {o.shape} vs model dim {m.dim}")
    times = _check_times(times)
    h_max = max_step(m) if step is None else float(step)
    if not h_max > 0:
        raise InvalidParam("step must be positive")
    a = 1j * m.V - 0.5 * m.K
    ad = dagger(a)
    jd = [(dagger(j), j) for j in m.jumps]

    def rhs(x):
        out = a @ x + x @ ad
        for jdag, j in jd:
            out += jdag @ x @ j
        return out

    norm0 = op_norm(o)
    x = o.copy()
    t_now = 0.0
    out = []
    warned = False
    for t in times:
        span = t - t_now
        if span > 0:
            n = max(1, math.ceil(span / h_max - 1e-12))
            h = span / n
            for _ in range(n):
                k1 = rhs(x)
                k2 = rhs(x + 0.5 * h * k1)
                k3 = rhs(x + 0.5 * h * k2)
                k4 = rhs(x + h * k3)
                x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t_now = t
        if not warned and op_norm(x) > norm0 * (1 + DRIFT_WARN):
            warnings.warn(f"norm grew to {op_norm(x):.6g} (from {norm0:.6g}) by t={t}; "
                          "reduce the step", StepTooLarge, stacklevel=2)
            warned = True
        out.append(x.copy())
    return out


def evolve_open_exact(m: LindbladModel, o, times: Sequence[float]) -> list[np.ndarray]:
    """Reference solution through the exponential of the dense superoperator."""
    o = as_operator(o)
    d = m.dim
    if d > 16:
        raise InvalidParam("dense superoperator route is limited to dimension 16")
    sup = adjoint_superoperator(m)
    vec = o.reshape(-1)
    return [(expm(sup * t) @ vec).reshape(d, d) for t in _check_times(times)]


def dfs_projector(m: LindbladModel) -> BandSplit:
    """Kernel projector of ``H0`` with the gap to the rest of its spectrum."""
    h0 = m.H0
    eig = eig_hermitian(h0)
    lam = eig.eigenvalues
    scale = max(abs(lam).max(), 1e-300)
    kernel = np.abs(lam) <= 1e-10 * scale
    if not kernel.any():
        raise NoDfs("H0 = sum J^dag J / 2 has trivial kernel")
    if kernel.all():
        raise NoDfs("every jump vanishes; there is no dissipation")
    wp = eig.basis[:, kernel]
    p = wp @ dagger(wp)
    for k, j in enumerate(m.jumps):
        jn = op_norm(j)
        if op_norm(j @ p) > 1e-10 * max(jn, 1e-300):
            raise DfsViolation(f"jump {k} does not annihilate the kernel of H0")
    return split_from_projector(h0, p)


def epsilon_open(m: LindbladModel, o, times: Sequence[float],
                 step: float | None = None) -> OpenErrorTrace:
    """Distance between full open dynamics and unitary dynamics under PVP, in the DFS."""
    o = as_operator(o)
    scale = op_norm(o)
    if scale == 0:
        raise InvalidParam("observable must be nonzero")
    o = o / scale
    split = dfs_projector(m)
    times = _check_times(times)
    full = evolve_open(m, o, times, step)
    vp = split.P @ m.V @ split.P
    eig_vp = eig_hermitian(vp)
    wp = split.p_basis
    eps = np.array([
        op_norm(dagger(wp) @ (ot - evolve_conjugate(eig_vp, o, t)) @ wp)
        for t, ot in zip(times, full)])
    v_norm = op_norm(m.V)
    gap = split.gap
    p = BoundParams(v_norm=v_norm, gap=gap, c=m.jump_weight / gap)
    bounds = {
        "bound_exact": np.array([bound_open(p, t) for t in times]),
        "bound_asymptotic": np.array([bound_open_asymptotic(p, t) for t in times]),
    }
    meta = {"v_norm": v_norm, "gap": gap, "c": p.c, "observable_scale": scale,
            "dfs_rank": split.rank, "non_rigorous": ["bound_asymptotic"],
            "max_norm": float(max(op_norm(x) for x in full)) if full else 0.0}
    return OpenErrorTrace(times, eps, bounds, meta)


def _check_rates(delta0, omega):
    if not delta0 > 0:
        raise InvalidParam(f"delta0 must be positive, got {delta0}")
    if not np.isfinite(omega):
        raise InvalidParam("omega must be finite")


def build_example1(delta0: float, omega: float) -> tuple[LindbladModel, np.ndarray]:
    """Resonantly driven two-level atom decaying from |e> to |g>."""
    _check_rates(delta0, omega)
    m = LindbladModel(V=omega / 2 * SX, jumps=[math.sqrt(2 * delta0) * SMINUS])
    return m, SY.copy()


def build_example2(delta0: float, omega: float) -> tuple[LindbladModel, np.ndarray]:
    """Two atoms with a joint decay |ee> -> |gg>; only atom 1 is driven."""
    _check_rates(delta0, omega)
    j = math.sqrt(2 * delta0) * np.kron(SMINUS, SMINUS)
    v = omega / 2 * np.kron(SX, ID2)
    o = 0.5 * (np.kron(SX, SX) + np.kron(SY, SY))
    return LindbladModel(V=v, jumps=[j]), o


def modified_jump(s, j, s_inv=None) -> np.ndarray:
    """S^-1 J S - J for an invertible transform ``S``."""
    s = as_operator(s)
    j = as_operator(j)
    if s_inv is None:
        cond = np.linalg.cond(s)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularS(f"transform is numerically singular (cond={cond:.3e})")
        s_inv = np.linalg.inv(s)
    return s_inv @ j @ s - j


def single_jump_decay(jump, o, times: Sequence[float]) -> np.ndarray:
    """Overlap tr(O^dag O_t)/tr(O^dag O) under the purely dissipative flow of ``jump``."""
    jump = as_operator(jump)
    m = LindbladModel(V=np.zeros_like(jump), jumps=[jump])
    o = as_operator(o)
    norm2 = np.real(np.trace(dagger(o) @ o))
    evolved = evolve_open_exact(m, o, times)
    return np.array([np.real(np.trace(dagger(o) @ x)) / norm2 for x in evolved])


def slope_fit(trace: ErrorTrace, window: tuple[float, float]) -> float:
    lo, hi = window
    t = trace.times
    if lo < t.min() - 1e-12 or hi > t.max() + 1e-12 or not lo < hi:
        raise InvalidParam(f"window {window} outside trace [{t.min()}, {t.max()}]")
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < 2:
        raise InvalidParam("fewer than two samples inside the window")
    slope, _ = np.polyfit(t[mask], trace.epsilon[mask], 1)
    return float(slope)


def saturation_value(trace: ErrorTrace, rel_tol: float = 0.01) -> float:
    """Mean of the last 10% of samples; the spread there must stay below ``rel_tol``."""
    n = len(trace.epsilon)
    tail = trace.epsilon[n - max(2, n // 10):]
    mean = float(np.mean(tail))
    spread = float(tail.max() - tail.min())
    if n < 20 or spread > rel_tol * abs(mean):
        raise NotSaturated(f"final-decade spread {spread:.3g} vs mean {mean:.3g}")
    return mean
