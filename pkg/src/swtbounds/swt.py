"""Schrieffer-Wolff transformations relative to an isolated energy band.

Three generator conventions are supported:

``closed_H0``
    anti-Hermitian ``T`` with ``[H0, T] = V_off``.
``closed_H1``
    anti-Hermitian ``T`` with ``[T, H1] = -V_off`` where ``H1 = H0 + V_diag``.
``open_hermitian``
    Hermitian ``T`` with ``[T, H0] = i V_off``; ``S = e^T`` is then a positive
    similarity transform of the non-Hermitian generator ``-H0 + iV``.

In every case ``T`` is block off-diagonal and ``P T Q`` solves a Sylvester
equation in the eigenbases of the two diagonal blocks of the reference
Hamiltonian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (EmptyBand, GapTooSmall, GapZero, InvalidParam, NoComplement,
                     SeriesDiverging)
from .lattice import InteractionSum, LocalTerm, SupportSet
from .linalg import (HermitianEigen, as_operator, commutator, dagger, eig_hermitian,
                     exp_normal, op_norm, solve_sylvester)

__all__ = [
    "VARIANTS", "BandSplit", "SwtResult", "LocalSwt",
    "band_split", "split_from_projector", "block_split",
    "swt_generator", "v_prime", "build_swt", "generator_residual",
    "local_swt",
]

VARIANTS = ("closed_H0", "closed_H1", "open_hermitian")
MAX_ORDER = 40


@dataclass(frozen=True)
class BandSplit:
    """Projector ``P`` onto a spectral band, its complement and the gap.

    ``p_basis``/``q_basis`` hold orthonormal bases (columns) of the two ranges.
    """

    P: np.ndarray
    Q: np.ndarray
    gap: float
    band_window: tuple[float, float]
    p_basis: np.ndarray
    q_basis: np.ndarray

    @property
    def rank(self) -> int:
        return self.p_basis.shape[1]


def band_split(h0, window) -> BandSplit:
    """Split the spectrum of ``h0`` into the eigenvalues inside ``window`` and the rest."""
    lo, hi = float(window[0]), float(window[1])
    eig = eig_hermitian(h0)
    lam = eig.eigenvalues
    inside = (lam >= lo) & (lam <= hi)
    if not inside.any():
        raise EmptyBand(f"no eigenvalue of H0 inside [{lo}, {hi}]")
    if inside.all():
        raise NoComplement(f"every eigenvalue of H0 lies inside [{lo}, {hi}]")
    gap = float(np.min(np.abs(lam[inside][:, None] - lam[~inside][None, :])))
    scale = max(abs(lam[0]), abs(lam[-1]))
    if gap < 1e-12 * scale:
        raise GapZero(f"band gap {gap:.3e} is numerically zero")
    wp = eig.basis[:, inside]
    wq = eig.basis[:, ~inside]
    p = wp @ dagger(wp)
    return BandSplit(P=p, Q=np.eye(len(lam)) - p, gap=gap, band_window=(lo, hi),
                     p_basis=wp, q_basis=wq)


def _block_spectrum(h, basis) -> np.ndarray:
    blk = dagger(basis) @ h @ basis
    return np.linalg.eigvalsh((blk + dagger(blk)) / 2)


def split_from_projector(h, p, atol: float = 1e-9) -> BandSplit:
    """BandSplit of ``h`` for a given projector ``p`` that commutes with it.

    The gap is the distance between the spectra of the two diagonal blocks.
    """
    h = as_operator(h)
    p = as_operator(p)
    pe = eig_hermitian(p)
    inside = pe.eigenvalues > 0.5
    if not inside.any():
        raise EmptyBand("projector has rank zero")
    if inside.all():
        raise NoComplement("projector is the identity")
    wp, wq = pe.basis[:, inside], pe.basis[:, ~inside]
    if op_norm(dagger(wq) @ h @ wp) > atol * max(op_norm(h), 1.0):
        raise InvalidParam("operator does not commute with the projector")
    # compressions of a Hermitian h; symmetrise instead of re-testing, since a
    # block may be pure rounding noise (e.g. an exact kernel)
    a = _block_spectrum(h, wp)
    b = _block_spectrum(h, wq)
    gap = float(np.min(np.abs(a[:, None] - b[None, :])))
    p_clean = wp @ dagger(wp)
    return BandSplit(P=p_clean, Q=np.eye(h.shape[0]) - p_clean, gap=gap,
                     band_window=(float(a.min()), float(a.max())), p_basis=wp, q_basis=wq)


def block_split(v, split: BandSplit) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(V_diag, V_off)`` with ``V_diag = PVP + QVQ`` and ``V_off = V - V_diag``."""
    v = as_operator(v)
    p, q = split.P, split.Q
    v_diag = p @ v @ p + q @ v @ q
    return v_diag, v - v_diag


@dataclass(frozen=True)
class SwtResult:
    variant: str
    T: np.ndarray
    S: np.ndarray
    h_ref: np.ndarray
    gap_ref: float
    H1: np.ndarray | None = None
    V_prime: np.ndarray | None = None
    truncation_order: int = 0
    tail_estimate: float = 0.0
    term_norms: tuple[float, ...] = field(default=(), repr=False)

    @property
    def t_norm(self) -> float:
        return op_norm(self.T)

    @property
    def S_inv(self) -> np.ndarray:
        if self.variant == "open_hermitian":
            return exp_normal(-self.T)
        return dagger(self.S)


def _block_eigen(h, basis) -> HermitianEigen:
    blk = dagger(basis) @ h @ basis
    return eig_hermitian((blk + dagger(blk)) / 2)


def swt_generator(h_ref, v, split: BandSplit, variant: str = "closed_H0") -> SwtResult:
    """Generator ``T`` and transform ``S = e^T``; ``h_ref`` is H0 or (for closed_H1) H1."""
    if variant not in VARIANTS:
        raise InvalidParam(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    h_ref = as_operator(h_ref)
    v = as_operator(v)
    if variant == "closed_H1" and 2 * op_norm(v) >= split.gap:
        raise GapTooSmall("closed_H1 generator needs 2||V|| < gap")
    wp, wq = split.p_basis, split.q_basis
    a = _block_eigen(h_ref, wp)
    b = _block_eigen(h_ref, wq)
    gap_ref = float(np.min(np.abs(a.eigenvalues[:, None] - b.eigenvalues[None, :])))
    v_pq = dagger(wp) @ v @ wq
    if variant == "open_hermitian":
        x = solve_sylvester(a, b, -1j * v_pq)
        t_pq = wp @ x @ dagger(wq)
        t = t_pq + dagger(t_pq)
    else:
        x = solve_sylvester(a, b, v_pq)
        t_pq = wp @ x @ dagger(wq)
        t = t_pq - dagger(t_pq)
    return SwtResult(variant=variant, T=t, S=exp_normal(t), h_ref=h_ref, gap_ref=gap_ref)


def _factorial_tail(x: float, n: int, scale: float) -> float:
    """scale * sum_{k>n} x^k / k!  (the remainder of exp after order n)."""
    term = scale
    for k in range(1, n + 1):
        term *= x / k
    total = 0.0
    k = n
    while True:
        k += 1
        term *= x / k
        total += term
        if term <= 1e-17 * max(total, 1e-300) or k > n + 400:
            return total


def v_prime(res: SwtResult, v, split: BandSplit, tol: float | None = None) -> SwtResult:
    """Sum the residual-interaction series and complete ``res`` with H1 and V'.

    Stops when a term drops below ``tol`` (default ``1e-12 ||V||``) or at order
    40. ``tail_estimate`` is the factorial remainder bound
    ``||V|| sum_{k>n} (2||T||)^k / k!`` for the discarded orders.
    """
    v = as_operator(v)
    v_norm = op_norm(v)
    if tol is None:
        tol = 1e-12 * v_norm
    v_diag, v_off = block_split(v, split)
    t = res.T
    if res.variant == "open_hermitian":
        h1 = -res.h_ref + 1j * v_diag
        a, b = 1j * v, 1j * v_off
    elif res.variant == "closed_H0":
        h1 = res.h_ref + v_diag
        a, b = v, v_off
    else:
        h1 = res.h_ref
        a, b = np.zeros_like(v), v_off
    x = 2 * res.t_norm
    total = np.zeros_like(v)
    norms: list[float] = []
    growth = 0
    n = 0
    fact = 1.0
    for n in range(1, MAX_ORDER + 1):
        fact *= n
        if res.variant != "closed_H1":
            a = commutator(t, a)
        b = commutator(t, b)
        if res.variant == "closed_H1":
            term = (n / (n + 1)) * b / fact
        else:
            term = (a - b / (n + 1)) / fact
        total = total + term
        tn = op_norm(term)
        if norms and tn > norms[-1] and n > x:
            growth += 1
            if growth >= 5:
                raise SeriesDiverging(f"series terms grew for 5 consecutive orders (n={n})")
        else:
            growth = 0
        norms.append(tn)
        if tn < tol:
            break
    # reported even after convergence: rigorous remainder of the majorant series
    tail = _factorial_tail(x, n, v_norm)
    return replace(res, H1=h1, V_prime=total, truncation_order=n, tail_estimate=tail,
                   term_norms=tuple(norms))


def build_swt(h0, v, split: BandSplit, variant: str = "closed_H0",
              tol: float | None = None) -> SwtResult:
    """Convenience wrapper: choose ``h_ref`` for the variant, then sum V'."""
    h0 = as_operator(h0)
    if variant == "closed_H1":
        v_diag, _ = block_split(v, split)
        h_ref = h0 + v_diag
    else:
        h_ref = h0
    return v_prime(swt_generator(h_ref, v, split, variant), v, split, tol)


def generator_residual(res: SwtResult, v, split: BandSplit) -> float:
    """Norm of the defining commutator equation residual for ``res.T``."""
    _, v_off = block_split(v, split)
    t, h = res.T, res.h_ref
    if res.variant == "closed_H0":
        r = commutator(h, t) - v_off
    elif res.variant == "closed_H1":
        r = commutator(t, h) + v_off
    else:
        r = commutator(t, h) - 1j * v_off
    return op_norm(r)


@dataclass
class LocalSwt:
    """Local generator ``T = sum_A L_A(V_A)`` and the locally projected ``H1``."""

    T: InteractionSum
    H1: np.ndarray
    off_diagonal: np.ndarray
    projectors: list[np.ndarray]


def _kernel_projector(m: np.ndarray, tol: float) -> np.ndarray:
    if not np.any(m - np.diag(np.diag(m))):
        return np.diag((np.abs(np.diag(m).real) <= tol).astype(complex))
    eig = eig_hermitian(m)
    return eig.function(lambda x: (np.abs(x) <= tol).astype(float))


def _pinv_hermitian(m: np.ndarray, tol: float) -> np.ndarray:
    if not np.any(m - np.diag(np.diag(m))):
        d = np.diag(m).real
        inv = np.zeros_like(d)
        mask = np.abs(d) > tol
        inv[mask] = 1.0 / d[mask]
        return np.diag(inv.astype(complex))
    eig = eig_hermitian(m)
    return eig.function(lambda x: np.where(np.abs(x) > tol, 1.0 / np.where(x == 0, 1, x), 0.0))


def local_swt(h0: InteractionSum, v: InteractionSum) -> LocalSwt:
    """First-order local SWT for a commuting, frustration-free ``h0``.

    Each ``V_A`` is block-diagonalised against ``P_A``, the product of the
    kernel projectors of the ``h0`` terms overlapping ``A``.
    """
    n = h0.chain_length
    dim = h0.dim
    scale = max((t.local_norm for t in h0.terms), default=1.0)
    tol = 1e-10 * scale
    projectors = [_kernel_projector(t.matrix, tol) for t in h0.terms]
    t_terms: list[LocalTerm] = []
    h1 = h0.total()
    o_loc = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for va in v.terms:
        overlap = [i for i, t in enumerate(h0.terms)
                   if set(t.support.sites) & set(va.support.sites)]
        p_a = eye.copy()
        h0a = np.zeros((dim, dim), dtype=complex)
        sites = set(va.support.sites)
        for i in overlap:
            p_a = p_a @ projectors[i]
            h0a += h0.terms[i].matrix
            sites |= set(h0.terms[i].support.sites)
        q_a = eye - p_a
        d_a = p_a @ va.matrix @ p_a + q_a @ va.matrix @ q_a
        h1 += d_a
        o_loc += va.matrix - d_a
        x = _pinv_hermitian(q_a @ h0a @ q_a, tol) @ q_a @ va.matrix @ p_a
        gen = x - dagger(x)
        t_terms.append(LocalTerm(SupportSet(tuple(sorted(sites)), n), gen))
    return LocalSwt(T=InteractionSum(n, t_terms), H1=h1, off_diagonal=o_loc,
                    projectors=projectors)
