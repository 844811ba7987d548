"""Exact versus constrained dynamics of closed systems.

The error of the constrained approximation is the worst case over band
states, i.e. the operator norm of the band-projected difference of the two
Heisenberg-picture observables. Nothing is sampled over states.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import (BoundParams, bound_asymptotic, bound_b1, bound_b2,
                     bound_single_state, lieb_robinson_bound)
from .errors import BandNotRankOne, InvalidParam, ThresholdNeverCrossed
from .lattice import SY, LocalTerm, SupportSet, embed_site, site_commutator_norm
from .linalg import (HermitianEigen, as_operator, commutator, dagger, eig_hermitian,
                     op_norm)
from .swt import BandSplit, block_split, build_swt, generator_residual

__all__ = [
    "ErrorTrace", "LightConeGrid", "FrontFit",
    "epsilon_closed", "epsilon_decomposed", "epsilon_single_state",
    "commutator_growth", "light_cone", "front_fit", "velocity_extract",
    "lr_bound_eval", "verify_swt_identities", "verify_local_swt",
]


@dataclass
class ErrorTrace:
    times: np.ndarray
    epsilon: np.ndarray
    bounds: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.epsilon = np.asarray(self.epsilon, dtype=float)
        for k, v in self.bounds.items():
            self.bounds[k] = np.asarray(v, dtype=float)
        n = len(self.times)
        if len(self.epsilon) != n or any(len(v) != n for v in self.bounds.values()):
            raise InvalidParam("trace columns must all have the same length")

    def violations(self, name: str, atol: float = 0.0) -> int:
        return int(np.sum(self.epsilon > self.bounds[name] + atol))


def _normalized(o) -> tuple[np.ndarray, float]:
    o = as_operator(o)
    scale = op_norm(o)
    if scale == 0:
        raise InvalidParam("observable must be nonzero")
    return o / scale, scale


def _eig(h) -> HermitianEigen:
    return h if isinstance(h, HermitianEigen) else eig_hermitian(h)


def _real_sandwich(w, x):
    """w @ x @ w.T for real ``w`` and complex ``x`` using two real products each."""
    # .real/.imag are strided views; matmul only reaches BLAS on contiguous data
    re = w @ np.ascontiguousarray(x.real) @ w.T
    im = w @ np.ascontiguousarray(x.imag) @ w.T
    return re + 1j * im


def _heisenberg_factory(eig: HermitianEigen, o: np.ndarray):
    w = eig.basis
    real = not np.iscomplexobj(w)
    o = np.asarray(o, dtype=complex)
    o_eig = _real_sandwich(w.T, o) if real else dagger(w) @ o @ w

    def at(t: float) -> np.ndarray:
        ph = np.exp(1j * eig.eigenvalues * t)
        x = ph[:, None] * o_eig * ph.conj()[None, :]
        return _real_sandwich(w, x) if real else w @ x @ dagger(w)
    return at


def epsilon_closed(h0, v, split: BandSplit, o, times: Sequence[float]) -> ErrorTrace:
    """Constrained-dynamics error at each time, with the applicable bound columns."""
    h0, v = as_operator(h0), as_operator(v)
    o, scale = _normalized(o)
    h = h0 + v
    h_p = split.P @ h @ split.P
    full = _heisenberg_factory(eig_hermitian(h), o)
    constrained = _heisenberg_factory(eig_hermitian(h_p), o)
    wp = split.p_basis
    times = np.asarray(times, dtype=float)
    eps = np.array([op_norm(dagger(wp) @ (full(t) - constrained(t)) @ wp) for t in times])

    v_norm = op_norm(v)
    p = BoundParams(v_norm=v_norm, gap=split.gap)
    bounds = {"b1": np.array([bound_b1(p, t) for t in times])}
    if 2 * v_norm < split.gap:
        bounds["b2"] = np.array([bound_b2(p, t) for t in times])
    bounds["asymptotic"] = np.array([bound_asymptotic(p, t) for t in times])
    meta = {"v_norm": v_norm, "gap": split.gap, "observable_scale": scale,
            "band_rank": split.rank, "non_rigorous": ["asymptotic"]}
    return ErrorTrace(times, eps, bounds, meta)


def epsilon_decomposed(h0, v, split: BandSplit, o, times: Sequence[float],
                       variant: str = "closed_H0") -> np.ndarray:
    """Error evaluated through the SWT factorisation.

    Uses ``P[e^{-iH1 t} S^dag e^{iH1' t} S O S^dag e^{-iH1' t} S e^{iH1 t} - O]P``
    with ``H1' = H1 + V'``, so it agrees with :func:`epsilon_closed` only if the
    generator, the transform and the V' series are all correct.
    """
    o, _ = _normalized(o)
    res = build_swt(h0, v, split, variant)
    h1 = res.H1
    h1p = h1 + res.V_prime
    e1 = _eig((h1 + dagger(h1)) / 2)
    e1p = _eig((h1p + dagger(h1p)) / 2)
    s, sd = res.S, dagger(res.S)
    inner = s @ o @ sd
    wp = split.p_basis
    out = []
    for t in np.asarray(times, dtype=float):
        u1 = e1.function(lambda x: np.exp(-1j * x * t))  # e^{-iH1 t}
        u1p = e1p.function(lambda x: np.exp(1j * x * t))  # e^{iH1' t}
        left = u1 @ sd @ u1p
        x = left @ inner @ dagger(left)
        out.append(op_norm(dagger(wp) @ (x - o) @ wp))
    return np.array(out)


def epsilon_single_state(h0, v, psi_index, o, times: Sequence[float]) -> ErrorTrace:
    """Expectation-value drift of a single unperturbed eigenstate.

    ``psi_index`` is the position of the state in the ascending spectrum of
    ``h0`` or a rank-one :class:`BandSplit`.
    """
    h0, v = as_operator(h0), as_operator(v)
    o, scale = _normalized(o)
    e0 = eig_hermitian(h0)
    lam = e0.eigenvalues
    if isinstance(psi_index, BandSplit):
        if psi_index.rank != 1:
            raise BandNotRankOne(f"band has rank {psi_index.rank}")
        psi = psi_index.p_basis[:, 0]
        energy = float(np.real(psi.conj() @ h0 @ psi))
    else:
        psi = e0.basis[:, int(psi_index)]
        energy = lam[int(psi_index)]
    others = np.abs(lam - energy)
    degenerate = np.sum(others <= 1e-10 * max(1.0, np.abs(lam).max()))
    if degenerate != 1:
        raise BandNotRankOne(f"eigenvalue {energy} has multiplicity {degenerate}")
    gap = float(np.sort(others)[1])
    eh = eig_hermitian(h0 + v)
    coeff = dagger(eh.basis) @ psi
    ref = np.real(psi.conj() @ o @ psi)
    times = np.asarray(times, dtype=float)
    eps = []
    for t in times:
        state = eh.basis @ (np.exp(-1j * eh.eigenvalues * t) * coeff)
        eps.append(abs(np.real(state.conj() @ o @ state) - ref))
    v_norm = op_norm(v)
    bounds = {}
    if 2 * v_norm < gap:
        const = bound_single_state(BoundParams(v_norm=v_norm, gap=gap))
        bounds["const_bound"] = np.full(len(times), const)
    meta = {"v_norm": v_norm, "gap": gap, "observable_scale": scale}
    return ErrorTrace(times, np.array(eps), bounds, meta)


def _single_site(term) -> tuple[int, np.ndarray] | None:
    if isinstance(term, LocalTerm) and len(term.support) == 1 and term.local is not None:
        return term.support.sites[0], term.local
    return None


def _matrix(term) -> np.ndarray:
    return term.matrix if isinstance(term, LocalTerm) else as_operator(term)


def commutator_growth(h, o_x, o_y, times: Sequence[float]) -> np.ndarray:
    """``||[O_X(t), O_Y]||`` for each time; ``h`` may be pre-diagonalised."""
    eig = _eig(h)
    ox = _matrix(o_x)
    heis = _heisenberg_factory(eig, ox)
    site = _single_site(o_y)
    n_sites = int(round(np.log2(eig.dim)))
    out = []
    for t in np.asarray(times, dtype=float):
        a = heis(t)
        if site is not None and 2 ** n_sites == eig.dim:
            out.append(site_commutator_norm(a, site[1], site[0], n_sites))
        else:
            out.append(op_norm(commutator(a, _matrix(o_y))))
    return np.array(out)


@dataclass
class LightConeGrid:
    times: np.ndarray
    sites: np.ndarray
    commutator_norms: np.ndarray  # shape (len(times), len(sites))


def light_cone(h, o_x, n: int, times: Sequence[float], probe=SY) -> LightConeGrid:
    """Commutator norms of ``O_X(t)`` against ``probe`` on every site 1..n."""
    eig = _eig(h)
    heis = _heisenberg_factory(eig, _matrix(o_x))
    times = np.asarray(times, dtype=float)
    sites = np.arange(1, n + 1)
    grid = np.empty((len(times), n))
    for k, t in enumerate(times):
        a = heis(t)
        for j in sites:
            grid[k, j - 1] = site_commutator_norm(a, probe, int(j), n)
    return LightConeGrid(times, sites, grid)


@dataclass
class FrontFit:
    velocity: float
    intercept: float
    r_squared: float
    crossings: dict[int, float]


def _first_crossing(times, values, threshold):
    above = np.nonzero(values >= threshold)[0]
    if len(above) == 0:
        return None
    k = above[0]
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    y0, y1 = values[k - 1], values[k]
    return float(t0 + (threshold - y0) * (t1 - t0) / (y1 - y0))


def front_fit(grid: LightConeGrid, threshold: float = 1.0, min_site: int = 3) -> FrontFit:
    """Least-squares line site = v * t_cross + b through the first threshold crossings."""
    if not 0 < threshold < 2:
        raise InvalidParam("threshold must lie in (0, 2)")
    crossings = {}
    for idx, j in enumerate(grid.sites):
        if j < min_site:
            continue
        tc = _first_crossing(grid.times, grid.commutator_norms[:, idx], threshold)
        if tc is not None:
            crossings[int(j)] = tc
    if len(crossings) < 2:
        raise ThresholdNeverCrossed(
            f"only {len(crossings)} site(s) crossed threshold {threshold}")
    t = np.array(list(crossings.values()))
    j = np.array(list(crossings.keys()), dtype=float)
    slope, intercept = np.polyfit(t, j, 1)
    resid = j - (slope * t + intercept)
    ss_tot = np.sum((j - j.mean()) ** 2)
    r2 = 1 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return FrontFit(float(slope), float(intercept), float(r2), crossings)


def velocity_extract(grid: LightConeGrid, threshold: float = 1.0) -> float:
    return front_fit(grid, threshold).velocity


def lr_bound_eval(params: BoundParams, x: SupportSet, y: SupportSet, t: float,
                  ox_norm: float = 1.0, oy_norm: float = 1.0) -> float:
    """Lieb-Robinson commutator bound on a chain (``C_d = 2``) for supports ``x``, ``y``."""
    return lieb_robinson_bound(params, len(x), len(y), x.distance(y), t, ox_norm, oy_norm)


def verify_swt_identities(h0, v, split: BandSplit, variant: str = "closed_H0", o=None,
                          times: Sequence[float] | None = None) -> dict:
    """Residuals of the SWT construction and of the error factorisation.

    Returns a plain dict; nothing is raised.
    """
    h0, v = as_operator(h0), as_operator(v)
    v_norm = op_norm(v)
    res = build_swt(h0, v, split, variant)
    h = h0 + v
    p, q = split.P, split.Q
    report = {
        "variant": variant,
        "generator_residual": generator_residual(res, v, split),
        "t_norm": res.t_norm,
        "t_pq_norm": op_norm(p @ res.T @ q),
        "t_diag_blocks": op_norm(p @ res.T @ p) + op_norm(q @ res.T @ q),
        "conjugation_residual": op_norm(res.S @ h @ res.S_inv - res.H1 - res.V_prime),
        "tail_estimate": res.tail_estimate,
        "v_prime_norm": op_norm(res.V_prime),
        "h1_projection_residual": op_norm(p @ res.H1 - p @ h @ p),
        "h1_off_block": op_norm(p @ res.H1 @ q),
    }
    if v_norm == 0:
        report["epsilon_route_gap"] = 0.0
        return report
    if o is None:
        o = v + h0 @ h0  # deterministic, generically not conserved
    if times is None:
        times = np.array([0.1, 1.0, 5.0]) / v_norm
    direct = epsilon_closed(h0, v, split, o, times).epsilon
    decomposed = epsilon_decomposed(h0, v, split, o, times, variant)
    report["epsilon_direct"] = direct
    report["epsilon_decomposed"] = decomposed
    report["epsilon_route_gap"] = float(np.max(np.abs(direct - decomposed)))
    return report


def _smallest_positive(m) -> float:
    lam = np.linalg.eigvalsh((m + dagger(m)) / 2)
    pos = lam[lam > 1e-10 * max(abs(lam).max(), 1e-300)]
    if len(pos) == 0:
        raise InvalidParam("local term has no positive eigenvalue")
    return float(pos.min())


def verify_local_swt(h0_sum, v_sum) -> dict:
    """Checks of the local SWT on a lattice model (small chains only)."""
    from .lattice import interaction_norm, w_constant
    from .swt import local_swt

    loc = local_swt(h0_sum, v_sum)
    h0, v = h0_sum.total(), v_sum.total()
    p = np.eye(h0.shape[0], dtype=complex)
    for pj in loc.projectors:
        p = p @ pj
    q = np.eye(h0.shape[0]) - p
    h = h0 + v
    gap = min(_smallest_positive(t.local if t.local is not None else t.matrix)
              for t in h0_sum.terms)
    t_total = loc.T.total()
    return {
        "generator_residual": op_norm(commutator(h0, t_total) - loc.off_diagonal),
        "h1_projection_residual": op_norm(p @ loc.H1 - p @ h @ p),
        "h1_off_block": op_norm(p @ loc.H1 @ q),
        "t_star": interaction_norm(loc.T),
        "t_star_bound": w_constant(h0_sum) * interaction_norm(v_sum) / gap,
        "term_ratios": [t.local_norm / max(va.local_norm, 1e-300)
                        for t, va in zip(loc.T.terms, v_sum.terms)],
        "gap": gap,
        "projector": p,
        "H1": loc.H1,
    }
