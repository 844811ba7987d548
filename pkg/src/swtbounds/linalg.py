"""Dense complex linear algebra kernel.

Operators are plain 2-D complex ``numpy`` arrays. Every exponential in this
package is of a normal matrix, so all of them go through ``numpy.linalg.eigh``
of a Hermitian representative rather than a Pade approximant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotNormal, SpectraOverlap

__all__ = [
    "HERMITIAN_RTOL",
    "HermitianEigen",
    "as_operator",
    "dagger",
    "commutator",
    "anticommutator",
    "is_hermitian",
    "op_norm",
    "trace_norm",
    "eig_hermitian",
    "evolve_conjugate",
    "exp_normal",
    "solve_sylvester",
]

HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition ``H = basis @ diag(eigenvalues) @ basis^dagger``.

    Eigenvalues are ascending; the columns of ``basis`` are orthonormal.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T

    def function(self, f) -> np.ndarray:
        """Apply the scalar function ``f`` to the operator spectrum."""
        return (self.basis * f(self.eigenvalues)) @ self.basis.conj().T


def as_operator(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(m))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def _fro(m):
    return float(np.linalg.norm(m))


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(m)
    scale = _fro(m)
    return _fro(m - dagger(m)) <= rtol * max(scale, np.finfo(float).tiny)


def op_norm(m) -> float:
    """Largest singular value.

    Hermitian input uses its own spectrum; anything else goes through the
    spectrum of ``M^dagger M`` with tiny negative eigenvalues clamped to zero.
    """
    m = np.asarray(m, dtype=complex)
    if m.size == 0 or not np.any(m):
        return 0.0
    square = m.ndim == 2 and m.shape[0] == m.shape[1]
    if square and is_hermitian(m, 1e-13):
        ev = np.linalg.eigvalsh((m + dagger(m)) / 2)
        return float(max(abs(ev[0]), abs(ev[-1])))
    if square and is_hermitian(1j * m, 1e-13):
        ev = np.linalg.eigvalsh((1j * m + dagger(1j * m)) / 2)
        return float(max(abs(ev[0]), abs(ev[-1])))
    # Gram matrix of the smaller side keeps rectangular blocks cheap.
    g = dagger(m) @ m if m.shape[1] <= m.shape[0] else m @ dagger(m)
    ev = np.linalg.eigvalsh((g + dagger(g)) / 2)
    return float(np.sqrt(max(ev[-1], 0.0)))


def trace_norm(m) -> float:
    """Schatten-1 norm: sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return 0.0
    g = dagger(m) @ m
    ev = np.linalg.eigvalsh((g + dagger(g)) / 2)
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))))


def eig_hermitian(h) -> HermitianEigen:
    h = as_operator(h)
    if not is_hermitian(h):
        raise NotHermitian("matrix is not Hermitian within relative tolerance 1e-10")
    h = (h + dagger(h)) / 2
    if not np.any(h.imag):
        # real symmetric: keep a real basis so products can use real BLAS
        w, v = np.linalg.eigh(h.real)
    else:
        w, v = np.linalg.eigh(h)
    return HermitianEigen(eigenvalues=w, basis=v)


def _eigen(h) -> HermitianEigen:
    return h if isinstance(h, HermitianEigen) else eig_hermitian(h)


def evolve_conjugate(h, o, t: float) -> np.ndarray:
    """Heisenberg-picture operator ``e^{iHt} O e^{-iHt}``.

    ``h`` may be a matrix or a precomputed :class:`HermitianEigen`; passing the
    decomposition avoids re-diagonalising when many times are needed.
    """
    eig = _eigen(h)
    o = np.asarray(o, dtype=complex)
    if o.shape != (eig.dim, eig.dim):
        raise DimensionMismatch(f"operator shape {o.shape} vs Hamiltonian dim {eig.dim}")
    w = eig.basis
    phase = np.exp(1j * eig.eigenvalues * t)
    o_eig = dagger(w) @ o @ w
    return w @ (phase[:, None] * o_eig * phase.conj()[None, :]) @ dagger(w)


def exp_normal(a) -> np.ndarray:
    """Matrix exponential of a normal matrix.

    The Hermitian and anti-Hermitian parts of a normal matrix commute, so
    ``e^A = e^{(A+A^dagger)/2} e^{(A-A^dagger)/2}`` with each factor taken
    from a Hermitian eigendecomposition.
    """
    a = as_operator(a)
    scale = max(_fro(a) ** 2, np.finfo(float).tiny)
    if _fro(a @ dagger(a) - dagger(a) @ a) > 1e-10 * scale:
        raise NotNormal("exp_normal requires A A^dagger = A^dagger A")
    herm = (a + dagger(a)) / 2
    anti = (a - dagger(a)) / 2
    out = np.eye(a.shape[0], dtype=complex)
    if np.any(herm):
        out = eig_hermitian(herm).function(np.exp)
    if np.any(anti):
        # anti = -i K with K = i*anti Hermitian
        k = eig_hermitian(1j * anti)
        out = out @ k.function(lambda x: np.exp(-1j * x))
    return out


def solve_sylvester(a, b, y) -> np.ndarray:
    """Solve ``A X - X B = Y`` for Hermitian ``A`` and ``B``.

    ``a`` and ``b`` are :class:`HermitianEigen` (matrices are decomposed on the
    fly). In the eigenbases the equation is diagonal, X~_ij = Y~_ij/(a_i - b_j).
    """
    a = _eigen(a)
    b = _eigen(b)
    y = np.asarray(y, dtype=complex)
    if y.shape != (a.dim, b.dim):
        raise DimensionMismatch(f"Y has shape {y.shape}, expected {(a.dim, b.dim)}")
    denom = a.eigenvalues[:, None] - b.eigenvalues[None, :]
    scale = np.max(np.abs(a.eigenvalues)) + np.max(np.abs(b.eigenvalues))
    sep = np.min(np.abs(denom))
    if sep < 1e-12 * scale or sep == 0.0:
        raise SpectraOverlap(f"spectra of A and B are separated by only {sep:.3e}")
    yt = dagger(a.basis) @ y @ b.basis
    return a.basis @ (yt / denom) @ dagger(b.basis)
