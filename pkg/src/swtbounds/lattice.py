"""Open spin-1/2 chains: site embedding, the PXP parent model, local norms.

Sites are numbered 1..N and site 1 is the most significant tensor factor, so
``embed_site(sz, 1, 2) == diag(1, 1, -1, -1)``. Basis index 0 of every site is
the spin-up (excited) state, ``sz = diag(1, -1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidParam
from .linalg import op_norm

__all__ = [
    "SX", "SY", "SZ", "ID2", "SPLUS", "SMINUS",
    "SupportSet", "LocalTerm", "InteractionSum",
    "embed_site", "embed_operator", "local_term",
    "build_pxp", "pxp_projector", "pxp_local_hamiltonian",
    "interaction_norm", "w_constant", "ball_volume_1d",
    "site_commutator_norm", "fibonacci",
]

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
# index 0 = |e> (up), index 1 = |g> (down); SMINUS = |g><e|
SMINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SPLUS = SMINUS.T.copy()


@dataclass(frozen=True)
class SupportSet:
    sites: tuple[int, ...]
    chain_length: int | None = None

    def __post_init__(self):
        s = tuple(sorted(set(int(x) for x in self.sites)))
        if not s:
            raise InvalidParam("support set must be nonempty")
        if s[0] < 1 or (self.chain_length is not None and s[-1] > self.chain_length):
            raise IndexOutOfRange(f"sites {s} outside chain 1..{self.chain_length}")
        object.__setattr__(self, "sites", s)

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, j):
        return j in self.sites

    @property
    def diameter(self) -> int:
        return self.sites[-1] - self.sites[0]

    @property
    def radius(self) -> int:
        # smallest r with a centre x such that every site is within r of x
        return math.ceil(self.diameter / 2)

    def distance(self, other: "SupportSet") -> int:
        return min(abs(x - y) for x in self.sites for y in other.sites)

    def union(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.sites + other.sites, self.chain_length)


@dataclass(frozen=True)
class LocalTerm:
    """A full-space operator together with its declared support."""

    support: SupportSet
    matrix: np.ndarray
    local_norm: float = field(default=-1.0)
    local: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.local_norm < 0:
            object.__setattr__(self, "local_norm", op_norm(self.matrix))


@dataclass
class InteractionSum:
    chain_length: int
    terms: list[LocalTerm] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return 2 ** self.chain_length

    def total(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            out += term.matrix
        return out

    def norm(self, mu: float = 0.0) -> float:
        return interaction_norm(self, mu)

    @property
    def max_diameter(self) -> int:
        return max((t.support.diameter for t in self.terms), default=0)

    @property
    def locality(self) -> int:
        """Largest number of sites in one term."""
        return max((len(t.support) for t in self.terms), default=0)


def _check_chain(n):
    if int(n) != n or n < 1:
        raise InvalidParam(f"chain length must be a positive integer, got {n}")


def embed_site(op, j: int, n: int) -> np.ndarray:
    _check_chain(n)
    if not 1 <= j <= n:
        raise IndexOutOfRange(f"site {j} outside chain 1..{n}")
    op = np.asarray(op, dtype=complex)
    left = np.eye(2 ** (j - 1), dtype=complex)
    right = np.eye(2 ** (n - j), dtype=complex)
    return np.kron(np.kron(left, op), right)


def embed_operator(op, sites: Sequence[int], n: int) -> np.ndarray:
    """Embed a ``2^k x 2^k`` operator acting on ``sites`` (in the given order)."""
    _check_chain(n)
    sites = list(sites)
    k = len(sites)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2 ** k, 2 ** k):
        raise InvalidParam(f"operator shape {op.shape} does not match {k} sites")
    if len(set(sites)) != k or any(not 1 <= s <= n for s in sites):
        raise IndexOutOfRange(f"bad site list {sites} for chain of {n}")
    rest = [s for s in range(1, n + 1) if s not in sites]
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    # axes of `full` are ordered (sites..., rest...); permute to 1..N
    order = sites + rest
    perm = [order.index(s) for s in range(1, n + 1)]
    t = full.reshape([2] * (2 * n))
    t = t.transpose(perm + [p + n for p in perm])
    return t.reshape(2 ** n, 2 ** n)


def local_term(op, sites: Sequence[int], n: int) -> LocalTerm:
    op = np.asarray(op, dtype=complex)
    return LocalTerm(SupportSet(tuple(sites), n), embed_operator(op, sites, n), local=op)


def build_pxp(n: int, delta0: float, omega: float) -> tuple[InteractionSum, InteractionSum]:
    """Parent PXP model: commuting blockade ``H0`` and transverse drive ``V``."""
    _check_chain(n)
    if n < 2:
        raise InvalidParam("PXP chain needs N >= 2")
    if not delta0 > 0:
        raise InvalidParam(f"delta0 must be positive, got {delta0}")
    up = (SZ + ID2) / 2
    bond = delta0 * np.kron(up, up)  # (delta0/4)(sz+1)(sz+1)
    h0 = InteractionSum(n, [local_term(bond, (j, j + 1), n) for j in range(1, n)])
    v = InteractionSum(n, [local_term(omega / 2 * SX, (j,), n) for j in range(1, n + 1)])
    return h0, v


def pxp_projector(n: int) -> np.ndarray:
    """Projector onto configurations without adjacent excitations (diagonal)."""
    _check_chain(n)
    if n < 2:
        raise InvalidParam("PXP chain needs N >= 2")
    idx = np.arange(2 ** n)
    # bit (n - j) of the index is 0 when site j is up
    ups = [((idx >> (n - j)) & 1) == 0 for j in range(1, n + 1)]
    allowed = np.ones(2 ** n, dtype=bool)
    for j in range(n - 1):
        allowed &= ~(ups[j] & ups[j + 1])
    return np.diag(allowed.astype(complex))


def pxp_local_hamiltonian(n: int, omega: float) -> np.ndarray:
    """Locally constrained PXP form (omega/2) sum_j P_{j-1} sx_j P_{j+1}, P = |g><g|."""
    down = (ID2 - SZ) / 2
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for j in range(1, n + 1):
        factors = [ID2] * n
        factors[j - 1] = SX
        if j > 1:
            factors[j - 2] = down
        if j < n:
            factors[j] = down
        out += reduce(np.kron, factors)
    return omega / 2 * out


def fibonacci(k: int) -> int:
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def interaction_norm(w: InteractionSum, mu: float = 0.0) -> float:
    """max_j sum_{A containing j} ||W_A|| exp(mu * diam A)."""
    if mu < 0:
        raise InvalidParam("mu must be non-negative")
    per_site = np.zeros(w.chain_length + 1)
    for term in w.terms:
        weight = term.local_norm * math.exp(mu * term.support.diameter)
        for j in term.support:
            per_site[j] += weight
    return float(per_site.max())


def w_constant(h0: InteractionSum) -> int:
    """max_j |union of the supports R_j' that contain j|."""
    best = 0
    for j in range(1, h0.chain_length + 1):
        covered: set[int] = set()
        for term in h0.terms:
            if j in term.support:
                covered.update(term.support.sites)
        best = max(best, len(covered))
    return best


def ball_volume_1d(r: float) -> float:
    if r < 0:
        raise InvalidParam("radius must be non-negative")
    return 2.0 * r + 1.0


def site_commutator_norm(a: np.ndarray, op, j: int, n: int) -> float:
    """``||[A, op_j]||`` for a Hermitian single-site ``op``.

    In the eigenbasis of ``op`` at site ``j`` the commutator only has the two
    off-diagonal site blocks, scaled by the eigenvalue gap, so the norm reduces
    to norms of half-dimension blocks.
    """
    op = np.asarray(op, dtype=complex)
    if not np.allclose(op, op.conj().T):
        full = embed_site(op, j, n)
        return op_norm(a @ full - full @ a)
    lam, u = np.linalg.eigh(op)
    gap = abs(lam[1] - lam[0])
    if gap < 1e-14:
        return 0.0
    t = np.asarray(a, dtype=complex).reshape(2 ** (j - 1), 2, 2 ** (n - j),
                                            2 ** (j - 1), 2, 2 ** (n - j))
    half = 2 ** (n - 1)

    def block(r, c):
        # (u^dag A u) restricted to row level r and column level c of site j
        out = np.zeros((half, half), dtype=complex)
        for x in range(2):
            for y in range(2):
                w = np.conj(u[x, r]) * u[y, c]
                if w != 0:
                    out += w * t[:, x, :, :, y, :].reshape(half, half)
        return out

    b01 = block(0, 1)
    b10 = block(1, 0)
    if np.allclose(b10, b01.conj().T, rtol=0, atol=1e-13 * max(1.0, float(np.abs(b01).max()))):
        return gap * op_norm(b01)
    return gap * max(op_norm(b01), op_norm(b10))


def supports_of(terms: Iterable[LocalTerm]) -> list[SupportSet]:
    return [t.support for t in terms]
