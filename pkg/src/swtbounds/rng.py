"""SplitMix64 generator and the random ensembles used by the property suites.

The generator is tiny and fully specified so that the same seed produces the
same ensemble in any language:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)                      (all arithmetic mod 2^64)

Uniform doubles take the top 53 bits; normals use Box-Muller, consuming two
uniforms per draw with no caching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import dagger, op_norm
from .opensys import LindbladModel
from .swt import BandSplit, split_from_projector

__all__ = ["SplitMix64", "ClosedInstance", "random_closed_instance",
           "closed_ensemble", "random_open_model", "open_ensemble"]

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0 ** -53)

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return lo + int(self.uniform() * (hi - lo + 1))

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return np.array([self.normal() for _ in range(n)]).reshape(shape)

    def complex_matrix(self, rows: int, cols: int) -> np.ndarray:
        re = self.normals((rows, cols))
        im = self.normals((rows, cols))
        return (re + 1j * im) / math.sqrt(2)

    def hermitian(self, d: int) -> np.ndarray:
        g = self.complex_matrix(d, d)
        return (g + dagger(g)) / 2

    def unitary(self, d: int) -> np.ndarray:
        q, r = np.linalg.qr(self.complex_matrix(d, d))
        ph = np.diag(r) / np.abs(np.diag(r))
        return q * ph[None, :]


@dataclass(frozen=True)
class ClosedInstance:
    h0: np.ndarray
    v: np.ndarray
    split: BandSplit
    observable: np.ndarray
    seed: int

    @property
    def ratio(self) -> float:
        return op_norm(self.v) / self.split.gap


def random_closed_instance(seed: int, dim_range=(4, 16), rank_range=(1, 3),
                           ratio_range=(0.01, 0.45)) -> ClosedInstance:
    """H0 with a band of 1-3 eigenvalues separated by gap 1 from the rest.

    Band levels lie in [-w, 0] with w <= 0.5; the other levels sit 1 to 4 away
    on either side, one of them exactly at distance 1. V is a random Hermitian
    matrix rescaled to the drawn ratio ``||V|| / gap``.
    """
    g = SplitMix64(seed)
    d = g.integer(*dim_range)
    k = g.integer(rank_range[0], min(rank_range[1], d - 1))
    width = g.uniform(0.0, 0.5)
    band = [-g.uniform(0.0, width) for _ in range(k)]
    lo_edge, hi_edge = min(band), max(band)
    rest = []
    for _ in range(d - k):
        if g.uniform() < 0.7:
            rest.append(hi_edge + 1.0 + g.uniform(0.0, 3.0))
        else:
            rest.append(lo_edge - 1.0 - g.uniform(0.0, 3.0))
    # pin the gap to exactly 1
    above = [x for x in rest if x > hi_edge]
    if above:
        above_min = min(above)
        rest[rest.index(above_min)] = hi_edge + 1.0
    else:
        below_max = max(rest)
        rest[rest.index(below_max)] = lo_edge - 1.0
    lam = np.array(band + rest)
    u = g.unitary(d)
    h0 = (u * lam) @ dagger(u)
    h0 = (h0 + dagger(h0)) / 2
    p = u[:, :k] @ dagger(u[:, :k])
    split = split_from_projector(h0, p)
    v = g.hermitian(d)
    v = v * (g.uniform(*ratio_range) * split.gap / op_norm(v))
    o = g.hermitian(d)
    o = o / op_norm(o)
    return ClosedInstance(h0, v, split, o, seed)


def closed_ensemble(n: int, seed: int = 2024, **kw) -> list[ClosedInstance]:
    master = SplitMix64(seed)
    return [random_closed_instance(master.next_u64(), **kw) for _ in range(n)]


def random_open_model(seed: int, dim: int = 4, min_ratio: float = 10.0):
    """One jump with a DFS of rank 1-3, gap normalised to 1, and ||V|| <= gap/min_ratio.

    Returns ``(model, observable)`` with a unit-norm Hermitian observable.
    """
    g = SplitMix64(seed)
    k = g.integer(1, dim - 1)
    u = g.unitary(dim)
    q = u[:, k:] @ dagger(u[:, k:])
    j = g.complex_matrix(dim, dim) @ q
    lam = np.linalg.eigvalsh(dagger(j) @ j / 2)
    delta0 = lam[lam > 1e-10 * lam.max()].min()
    j = j / math.sqrt(delta0)
    v = g.hermitian(dim)
    v = v * (g.uniform(0.05, 1.0) / (min_ratio * op_norm(v)))
    o = g.hermitian(dim)
    return LindbladModel(V=v, jumps=[j]), o / op_norm(o)


def open_ensemble(n: int, seed: int = 7, **kw):
    master = SplitMix64(seed)
    return [random_open_model(master.next_u64(), **kw) for _ in range(n)]
