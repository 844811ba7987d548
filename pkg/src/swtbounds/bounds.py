"""Closed-form error bounds for constrained dynamics.

All functions are cheap scalar evaluators. ``v_norm`` is the operator norm of
the perturbation for the few-body bounds and the local interaction strength
``||V||_*`` for the many-body ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect

from .errors import ConvergenceViolated, GapTooSmall, InvalidParam, NegativeInput

__all__ = [
    "BoundParams",
    "f_slope", "multiband_factor",
    "bound_b1", "bound_b2", "bound_asymptotic",
    "slope_b1", "slope_b2", "intercept_b1", "intercept_b2", "slope_crossover",
    "bound_single_state",
    "ball_polynomial", "p_kappa", "many_body_poly", "bound_many_body",
    "bound_many_body_1d_explicit", "saturation_time",
    "bound_vprime_local",
    "bound_open", "bound_open_asymptotic",
    "lieb_robinson_velocity", "lieb_robinson_bound",
]

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class BoundParams:
    """Scalars entering the bound formulas.

    Only the fields a given formula reads need to be set. ``c`` is the
    dissipation ratio ``sum_j ||J_j||^2 / gap``; ``w``, ``u``, ``d``,
    ``velocity``, ``kappa``, ``x_size``, ``r_x`` and ``l0`` enter the
    many-body bound; ``eta``, ``c_d`` and ``v_norm_mu`` the Lieb-Robinson one.
    """

    v_norm: float
    gap: float
    c: float = 0.0
    w: int = 1
    u: int = 1
    d: int = 1
    velocity: float = 1.0
    kappa: float = 1.0
    x_size: int = 1
    r_x: float = 0.0
    l0: float = 0.0
    eta: float = 0.5
    c_d: float = 2.0
    v_norm_mu: float | None = None

    def __post_init__(self):
        if self.v_norm < 0:
            raise InvalidParam("v_norm must be non-negative")
        if not self.gap > 0:
            raise InvalidParam("gap must be positive")

    @property
    def ratio(self) -> float:
        return self.v_norm / self.gap


def f_slope(x: float) -> float:
    """((x - 1) e^x + 1) / x, continuous at 0 with f(0) = 0."""
    if x < 0:
        raise NegativeInput("f is defined for x >= 0")
    if x < 0.5:
        # sum_{n>=1} n x^n / (n+1)!
        total, term = 0.0, 1.0
        for n in range(1, 40):
            term *= x / (n + 1)
            total += n * term
            if n * term < 1e-18 * max(total, 1e-300):
                break
        return total
    return ((x - 1.0) * math.exp(x) + 1.0) / x


def multiband_factor(ratio: float, enabled: bool = True) -> float:
    """Inflate a ``||V||/gap``-type ratio by pi/2 for multi-band Sylvester problems."""
    return HALF_PI * ratio if enabled else ratio


def _ratio_b2(p: BoundParams) -> float:
    if 2 * p.v_norm >= p.gap:
        raise GapTooSmall("bound needs ||V|| < gap/2")
    return p.v_norm / (p.gap - 2 * p.v_norm)


def intercept_b1(p: BoundParams, multiband: bool = False) -> float:
    return 4 * multiband_factor(p.ratio, multiband)


def slope_b1(p: BoundParams, multiband: bool = False) -> float:
    return 2 * math.expm1(2 * multiband_factor(p.ratio, multiband)) * p.v_norm


def intercept_b2(p: BoundParams, multiband: bool = False) -> float:
    return 4 * multiband_factor(_ratio_b2(p), multiband)


def slope_b2(p: BoundParams, multiband: bool = False) -> float:
    return 2 * f_slope(2 * multiband_factor(_ratio_b2(p), multiband)) * p.v_norm


def bound_b1(p: BoundParams, t: float, multiband: bool = False) -> float:
    """Linear-in-time bound valid for any coupling strength."""
    return intercept_b1(p, multiband) + slope_b1(p, multiband) * t


def bound_b2(p: BoundParams, t: float, multiband: bool = False) -> float:
    """Linear-in-time bound for ||V|| < gap/2; tighter at weak coupling."""
    return intercept_b2(p, multiband) + slope_b2(p, multiband) * t


def bound_asymptotic(p: BoundParams, t: float) -> float:
    """Leading-order large-gap form 4||V||/gap + 2||V||^2 t/gap.

    Not rigorous: it may be exceeded by O((||V||/gap)^2).
    """
    return 4 * p.ratio + 2 * p.v_norm * p.ratio * t


def slope_crossover(xtol: float = 1e-12) -> float:
    """Coupling ratio ||V||/gap where the two linear bounds have equal slopes."""
    def diff(x):
        return math.expm1(2 * x) - f_slope(2 * x / (1 - 2 * x))
    return bisect(diff, 1e-6, 0.499, xtol=xtol)


def bound_single_state(p: BoundParams) -> float:
    """Time-independent bound 8||V||/(gap - 2||V||) for a one-dimensional band."""
    return 8 * _ratio_b2(p)


# many-body ---------------------------------------------------------------

def ball_polynomial(d: int = 1, coeffs: Sequence[float] | None = None) -> Polynomial:
    """Volume of a radius-r ball; ``2r + 1`` on a chain unless ``coeffs`` is given."""
    if coeffs is not None:
        return Polynomial(list(coeffs))
    if d != 1:
        raise InvalidParam("give explicit ball-volume coefficients for d != 1")
    return Polynomial([1.0, 2.0])


def _eulerian_sums(q: float, kmax: int) -> list[float]:
    """sum_{n>=1} n^k q^n for k = 0..kmax, via the Eulerian-number closed form."""
    out = []
    for k in range(kmax + 1):
        if k == 0:
            out.append(q / (1 - q))
            continue
        # Eulerian numbers A(k, m)
        a = [sum((-1) ** i * math.comb(k + 1, i) * (m + 1 - i) ** k for i in range(m + 2))
             for m in range(k)]
        poly = sum(a[m] * q ** m for m in range(k))
        out.append(q * poly / (1 - q) ** (k + 1))
    return out


def p_kappa(kappa: float, ball: Polynomial) -> Polynomial:
    """The degree-d polynomial 2(e^k - 1) sum_{n>=1} b(r + n) e^{-n k}, as a function of r."""
    if not kappa > 0:
        raise InvalidParam("kappa must be positive")
    q = math.exp(-kappa)
    c = ball.coef
    deg = len(c) - 1
    sums = _eulerian_sums(q, deg)
    coef = np.zeros(deg + 1)
    # b(r + n) = sum_m c_m sum_k C(m, k) r^(m-k) n^k
    for m, cm in enumerate(c):
        for k in range(m + 1):
            coef[m - k] += cm * math.comb(m, k) * sums[k]
    return Polynomial(2 * math.expm1(kappa) * coef)


def many_body_poly(p: BoundParams, ball: Polynomial | None = None) -> tuple[Polynomial, Polynomial]:
    """(p~, P~): shifted light-cone polynomial and its antiderivative from 0."""
    if not p.velocity > 0:
        raise InvalidParam("velocity must be positive")
    if p.x_size < 1:
        raise InvalidParam("|X| must be at least 1")
    ball = ball if ball is not None else ball_polynomial(p.d)
    shift = p.r_x + p.l0 + math.log(p.x_size) / p.kappa
    pk = p_kappa(p.kappa, ball)
    ptilde = pk(Polynomial([shift, 1.0]))
    return ptilde, ptilde.integ(lbnd=0)


def bound_many_body(p: BoundParams, t: float, ball: Polynomial | None = None) -> float:
    """(||V||_*/gap) w [2|X| + p~(vt) + 4 u ||V||_* P~(vt)/v]."""
    if t < 0:
        raise InvalidParam("t must be non-negative")
    ptilde, pint = many_body_poly(p, ball)
    r = p.velocity * t
    inner = 2 * p.x_size + ptilde(r) + 4 * p.u * p.v_norm * pint(r) / p.velocity
    return float(p.ratio * p.w * inner)


def bound_many_body_1d_explicit(p: BoundParams, t: float) -> float:
    """Same bound on a chain, written with the closed-form 1D light-cone polynomial."""
    ek = math.exp(p.kappa)
    const = (3 * ek - 1) / (ek - 1)
    a = p.r_x + (math.log(p.x_size) + p.kappa * p.l0) / p.kappa
    r = p.velocity * t
    ptilde = 2 * (2 * (r + a) + const)
    pint = 2 * (r * r + 2 * a * r + const * r)
    inner = 2 * p.x_size + ptilde + 4 * p.u * p.v_norm * pint / p.velocity
    return float(p.ratio * p.w * inner)


def saturation_time(p: BoundParams) -> float:
    """Time scale (gap / (v^d ||V||_*^2))^(1/(d+1)) up to which the bound stays small."""
    return (p.gap / (p.velocity ** p.d * p.v_norm ** 2)) ** (1 / (p.d + 1))


def bound_vprime_local(p: BoundParams, mu: float = 0.0, t_star: float | None = None) -> float:
    """Upper bound on ||V'||_mu of the local SWT residual.

    ``t_star`` defaults to the generator estimate ``w ||V||_* / gap``.
    """
    if mu < 0:
        raise InvalidParam("mu must be non-negative")
    u, w = p.u, p.w
    if t_star is None:
        t_star = w * p.v_norm / p.gap
    grow = math.exp(mu * (u - 1))
    if u == 1:
        return w * p.v_norm * (math.exp(4 * t_star) - 1)
    y = 2 * (u - 1) * grow * t_star
    if y >= 1:
        raise ConvergenceViolated(
            f"series needs 2(u-1)e^(mu(u-1))||T||_* < 1, got {y:.4g}")
    return w * p.v_norm * grow * ((1 - y) ** (-2 * u / (u - 1)) - 1)


# open systems ------------------------------------------------------------

def bound_open(p: BoundParams, t: float) -> float:
    """Rigorous bound for the Zeno-limited dynamics; ``p.c`` = sum ||J||^2 / gap."""
    e = math.exp(2 * p.ratio)
    jsum = p.c * p.gap
    return (e - 1) * (1 + e + e * e * (2 * p.v_norm + (e - 1) * jsum) * t)


def bound_open_asymptotic(p: BoundParams, t: float) -> float:
    """Strong-dissipation form (4||V||/gap)[1 + (1 + c)||V|| t] (not rigorous)."""
    return 4 * p.ratio * (1 + (1 + p.c) * p.v_norm * t)


# Lieb-Robinson -----------------------------------------------------------

def lieb_robinson_velocity(p: BoundParams) -> float:
    """Light-cone velocity of H0 + V for commuting H0, set by ||V||_{kappa+eta}."""
    if not (p.kappa > 0 and p.eta > 0):
        raise InvalidParam("kappa and eta must be positive")
    vmu = p.v_norm_mu if p.v_norm_mu is not None else p.v_norm
    d = p.d
    return (2 * p.w * p.c_d * math.exp(p.eta) / p.kappa * (d / (math.e * p.eta)) ** d
            * math.exp(2 * (p.kappa + p.eta) * p.l0) * vmu)


def lieb_robinson_bound(p: BoundParams, x_size: int, y_size: int, dist: float, t: float,
                        ox_norm: float = 1.0, oy_norm: float = 1.0) -> float:
    """Commutator bound 2 e^{kappa l0} min(|X|,|Y|) ||O_X|| ||O_Y|| e^{-kappa (dist - v t)}."""
    if x_size < 1 or y_size < 1 or t < 0:
        raise InvalidParam("support sizes must be >= 1 and t >= 0")
    v = lieb_robinson_velocity(p)
    return (2 * math.exp(p.kappa * p.l0) * min(x_size, y_size) * ox_norm * oy_norm
            * math.exp(-p.kappa * (dist - v * t)))
