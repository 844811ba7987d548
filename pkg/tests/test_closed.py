import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, strategies as st

from swtbounds.bounds import BoundParams
from swtbounds.closed import (ErrorTrace, LightConeGrid, commutator_growth, epsilon_closed,
                              epsilon_decomposed, epsilon_single_state, front_fit, light_cone,
                              lr_bound_eval, velocity_extract)
from swtbounds.errors import BandNotRankOne, InvalidParam, ThresholdNeverCrossed
from swtbounds.lattice import SX, SY, SZ, SupportSet, build_pxp, embed_site, local_term, w_constant
from swtbounds.linalg import commutator, op_norm
from swtbounds.rng import random_closed_instance
from swtbounds.swt import band_split

TWO_LEVEL_H0 = np.diag([10.0, 0.0]).astype(complex)


def _brute_error(h0, v, split, o, t):
    """Independent route: scipy expm and explicit projectors."""
    o = o / op_norm(o)
    h = h0 + v
    hp = split.P @ h @ split.P
    u, up = sl.expm(1j * h * t), sl.expm(1j * hp * t)
    d = u @ o @ u.conj().T - up @ o @ up.conj().T
    return np.linalg.norm(split.P @ d @ split.P, 2)


@given(st.integers(0, 2**63 - 1), st.floats(0, 30))
def test_epsilon_closed_against_expm(seed, t):
    inst = random_closed_instance(seed)
    tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, [t])
    assert tr.epsilon[0] == pytest.approx(
        _brute_error(inst.h0, inst.v, inst.split, inst.observable, t), abs=1e-9)


def test_epsilon_closed_trivial_cases():
    inst = random_closed_instance(4)
    tr = epsilon_closed(inst.h0, 0 * inst.v, inst.split, inst.observable, [0.0, 1.0, 7.0])
    assert np.allclose(tr.epsilon, 0, atol=1e-12)
    tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, [0.0])
    assert tr.epsilon[0] < 1e-12
    assert set(tr.bounds) == {"b1", "b2", "asymptotic"}
    assert tr.metadata["non_rigorous"] == ["asymptotic"]


def test_b2_column_dropped_at_strong_coupling():
    inst = random_closed_instance(8, ratio_range=(0.6, 0.6))
    tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, [0.0, 1.0])
    assert "b2" not in tr.bounds and tr.violations("b1") == 0


def test_decomposed_route_matches():
    inst = random_closed_instance(21)
    ts = np.array([0.1, 1.0, 5.0]) / op_norm(inst.v)
    a = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, ts).epsilon
    for variant in ("closed_H0", "closed_H1"):
        b = epsilon_decomposed(inst.h0, inst.v, inst.split, inst.observable, ts, variant)
        assert np.allclose(a, b, atol=1e-8)


def _single_state_oracle(omega, t):
    h = TWO_LEVEL_H0 + omega / 2 * SX
    psi = sl.expm(-1j * h * t) @ np.array([0, 1])
    return abs(np.real(psi.conj() @ SX @ psi))


@pytest.mark.parametrize("omega", [0.1, 0.5, 1.0])
def test_single_state_against_propagator_and_bound(omega):
    ts = np.linspace(0, 100, 1001)
    tr = epsilon_single_state(TWO_LEVEL_H0, omega / 2 * SX, 1, SX, ts)
    for k in (7, 500, 1000):
        assert tr.epsilon[k] == pytest.approx(_single_state_oracle(omega, ts[k]), abs=1e-10)
    bound = 8 * (omega / 2) / (10 - omega)
    assert np.all(tr.bounds["const_bound"] == pytest.approx(bound))
    assert tr.epsilon.max() <= bound


def test_single_state_rejects_degenerate_band():
    h0 = np.diag([0.0, 0.0, 1.0])
    with pytest.raises(BandNotRankOne):
        epsilon_single_state(h0, 0.1 * np.eye(3), 0, np.eye(3), [0.0])
    split = band_split(h0, (-0.1, 0.1))
    with pytest.raises(BandNotRankOne):
        epsilon_single_state(h0, 0.1 * np.eye(3), split, np.eye(3), [0.0])


def test_single_state_projector_observable_with_zero_drive():
    psi_proj = np.diag([0.0, 1.0])
    tr = epsilon_single_state(TWO_LEVEL_H0, np.zeros((2, 2)), 1, psi_proj, [0.0, 50.0])
    assert np.allclose(tr.epsilon, 0)


def test_error_trace_rejects_ragged_columns():
    with pytest.raises(InvalidParam):
        ErrorTrace([0, 1], [0.0], {})


def _pxp(n, d0, om):
    h0, v = build_pxp(n, d0, om)
    return h0.total() + v.total()


def test_commutator_growth_against_dense():
    n = 5
    h = _pxp(n, 5.0, 2.0)
    ox, oy = local_term(SY, (1,), n), local_term(SY, (4,), n)
    ts = [0.0, 0.3, 1.1]
    got = commutator_growth(h, ox, oy, ts)
    for t, g in zip(ts, got):
        u = sl.expm(1j * h * t)
        a = u @ ox.matrix @ u.conj().T
        assert g == pytest.approx(np.linalg.norm(commutator(a, oy.matrix), 2), abs=1e-10)
    assert got[0] < 1e-12 and np.all(got <= 2 + 1e-12)
    # plain matrices take the dense path and agree
    plain = commutator_growth(h, ox.matrix, oy.matrix, ts)
    assert np.allclose(plain, got, atol=1e-10)


def test_light_cone_grid_matches_per_site_growth():
    n = 5
    h = _pxp(n, 10.0, 2.0)
    ts = np.linspace(0, 2, 5)
    grid = light_cone(h, local_term(SY, (1,), n), n, ts)
    assert grid.commutator_norms.shape == (5, n)
    col = commutator_growth(h, local_term(SY, (1,), n), local_term(SY, (3,), n), ts)
    assert np.allclose(grid.commutator_norms[:, 2], col, atol=1e-10)


def test_front_fit_on_synthetic_front():
    ts = np.linspace(0, 10, 201)
    sites = np.arange(1, 11)
    v_true = 1.7
    # ramps that cross 1 exactly at t = (j - 1) / v
    norms = np.clip(1 + (ts[:, None] - (sites[None, :] - 1) / v_true), 0, 2)
    fit = front_fit(LightConeGrid(ts, sites, norms), 1.0)
    assert fit.velocity == pytest.approx(v_true, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert min(fit.crossings) == 3
    assert velocity_extract(LightConeGrid(ts, sites, norms)) == pytest.approx(v_true)


def test_front_fit_errors():
    ts = np.linspace(0, 1, 5)
    flat = LightConeGrid(ts, np.arange(1, 6), np.zeros((5, 5)))
    with pytest.raises(ThresholdNeverCrossed):
        front_fit(flat)
    with pytest.raises(InvalidParam):
        front_fit(flat, threshold=2.5)


def test_zero_drive_never_spreads():
    n = 4
    h0, _ = build_pxp(n, 1.0, 0.0)
    grid = light_cone(h0.total(), local_term(SY, (1,), n), n, np.linspace(0, 5, 6))
    # the bond term dresses site 1 onto site 2 only
    assert np.all(grid.commutator_norms[:, 2:] < 1e-12)
    assert grid.commutator_norms[:, 1].max() > 0.5
    with pytest.raises(ThresholdNeverCrossed):
        front_fit(grid)


def test_lr_bound_dominates_simulation():
    n = 6
    h0, v = build_pxp(n, 10.0, 2.0)
    p = BoundParams(v_norm=1.0, gap=10.0, w=w_constant(h0), l0=1.0, kappa=0.5, eta=0.5)
    x, y = SupportSet((1,)), SupportSet((6,))
    ts = np.linspace(0, 2, 5)
    sim = commutator_growth(h0.total() + v.total(), local_term(SY, (1,), n),
                            local_term(SY, (6,), n), ts)
    for t, s in zip(ts, sim):
        assert s <= lr_bound_eval(p, x, y, t, 1.0, 1.0)
