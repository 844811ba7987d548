import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swtbounds.errors import (DfsViolation, DimensionMismatch, InvalidParam, NoDfs,
                              NotSaturated, SingularS, StepTooLarge)
from swtbounds.lattice import ID2, SMINUS, SX, SY, SZ
from swtbounds.linalg import evolve_conjugate, op_norm
from swtbounds.opensys import (LindbladModel, OpenErrorTrace, adjoint_superoperator,
                               build_example1, build_example2, dfs_projector, epsilon_open,
                               evolve_open, evolve_open_exact, lindblad_adjoint_rhs, max_step,
                               modified_jump, saturation_value, single_jump_decay, slope_fit)
from swtbounds.rng import random_open_model
from swtbounds.swt import build_swt

E = np.diag([1.0, 0.0]).astype(complex)   # |e><e|
G = np.diag([0.0, 1.0]).astype(complex)   # |g><g|


def test_rhs_closed_forms():
    gamma = 0.7
    m = LindbladModel(V=np.zeros((2, 2)), jumps=[math.sqrt(gamma) * SMINUS])
    assert np.allclose(lindblad_adjoint_rhs(m, E), -gamma * E)
    assert np.allclose(lindblad_adjoint_rhs(m, np.eye(2)), 0)
    free = LindbladModel(V=SZ, jumps=[])
    assert np.allclose(lindblad_adjoint_rhs(free, SZ), 0)
    with pytest.raises(DimensionMismatch):
        lindblad_adjoint_rhs(m, np.eye(3))


@given(st.integers(0, 2**63 - 1))
def test_rhs_matches_superoperator_and_keeps_hermiticity(seed):
    m, o = random_open_model(seed)
    lhs = lindblad_adjoint_rhs(m, o)
    assert np.allclose(lhs, lhs.conj().T, atol=1e-12)
    vec = adjoint_superoperator(m) @ o.reshape(-1)
    assert np.allclose(lhs.reshape(-1), vec, atol=1e-12)


@given(st.integers(0, 2**63 - 1))
def test_rk4_against_superoperator_exponential(seed):
    m, o = random_open_model(seed)
    ts = [0.0, 0.5, 3.0]
    a = evolve_open(m, o, ts)
    b = evolve_open_exact(m, o, ts)
    for x, y in zip(a, b):
        assert op_norm(x - y) <= 1e-7


def test_unitary_limit_matches_conjugation():
    rng = np.random.default_rng(1)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    v = (g + g.conj().T) / 2
    o = np.diag([1.0, -1.0, 0.5]).astype(complex)
    m = LindbladModel(V=v)
    # global RK4 error grows linearly in t ||V||; 1e-8 holds up to t ||V|| ~ 1.5
    for t, x in zip([0.4, 1.0], evolve_open(m, o, [0.4, 1.0])):
        assert op_norm(x - evolve_conjugate(v, o, t)) <= 1e-8
    x = evolve_open(m, o, [2.0], step=max_step(m) / 2)[0]
    assert op_norm(x - evolve_conjugate(v, o, 2.0)) <= 1e-8


def test_pure_decay_closed_forms():
    delta0 = 1.5
    m, _ = build_example1(delta0, 0.0)
    t = 0.8
    sx_t, e_t = (evolve_open(m, op, [t])[0] for op in (SX, E))
    # coherences decay at delta0, the excited population at 2 delta0
    assert np.allclose(sx_t, math.exp(-delta0 * t) * SX, atol=1e-9)
    assert np.allclose(e_t, math.exp(-2 * delta0 * t) * E, atol=1e-9)
    long = evolve_open(m, E, [40.0])[0]
    assert op_norm(long) < 1e-12


def test_richardson_fourth_order():
    m, o = build_example1(1.0, 0.4)
    ref = evolve_open_exact(m, o, [2.0])[0]
    errs = [op_norm(evolve_open(m, o, [2.0], step=h)[0] - ref) for h in (0.1, 0.05, 0.025)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.15)
    assert abs(errs[1] - errs[2]) < 1e-5
    fine = [evolve_open(m, o, [2.0], step=h)[0] for h in (max_step(m), max_step(m) / 2)]
    assert op_norm(fine[0] - fine[1]) < 1e-8


def test_unital_and_contracting():
    m, o = random_open_model(77)
    ones = evolve_open(m, np.eye(4), [0.5, 5.0])
    assert all(op_norm(x - np.eye(4)) <= 1e-8 for x in ones)
    assert all(op_norm(x) <= 1 + 1e-6 for x in evolve_open(m, o, np.linspace(0, 10, 11)))


def test_oversized_step_warns():
    m, o = build_example1(1.0, 0.1)
    with pytest.warns(StepTooLarge):
        evolve_open(m, o, [5.0], step=2.0)


def test_time_validation():
    m, o = build_example1(1.0, 0.1)
    with pytest.raises(InvalidParam):
        evolve_open(m, o, [1.0, 0.5])
    with pytest.raises(InvalidParam):
        evolve_open(m, o, [1.0], step=0.0)


def test_examples_structure():
    m1, o1 = build_example1(2.0, 0.1)
    assert np.allclose(m1.H0, 2.0 * E)
    assert op_norm(o1) == pytest.approx(1)
    s1 = dfs_projector(m1)
    assert np.allclose(s1.P, G) and s1.gap == pytest.approx(2.0)
    m2, o2 = build_example2(2.0, 0.1)
    ee = np.kron(E, E)
    assert np.allclose(m2.H0, 2.0 * ee)
    assert op_norm(o2) == pytest.approx(1)
    s2 = dfs_projector(m2)
    assert s2.rank == 3 and np.allclose(s2.P, np.eye(4) - ee)
    assert m2.jump_weight / m2.delta0 == pytest.approx(2.0)
    with pytest.raises(InvalidParam):
        build_example1(0.0, 1.0)


def test_dfs_errors():
    with pytest.raises(NoDfs):
        dfs_projector(LindbladModel(V=np.zeros((2, 2)), jumps=[ID2]))
    with pytest.raises(NoDfs):
        dfs_projector(LindbladModel(V=np.zeros((2, 2)), jumps=[np.zeros((2, 2))]))
    # J^dag J is below the kernel tolerance on |g> while J itself is not
    leaky = LindbladModel(V=np.zeros((2, 2)), jumps=[np.diag([1.0, 1e-7])])
    with pytest.raises(DfsViolation):
        dfs_projector(leaky)


def test_non_hermitian_drive_rejected():
    with pytest.raises(InvalidParam):
        LindbladModel(V=SMINUS)
    with pytest.raises(DimensionMismatch):
        LindbladModel(V=SX, jumps=[np.eye(3)])


def test_epsilon_open_zero_drive():
    m, o = build_example2(1.0, 0.0)
    tr = epsilon_open(m, o, [0.0, 1.0, 5.0])
    assert isinstance(tr, OpenErrorTrace)
    assert np.allclose(tr.epsilon, 0, atol=1e-12)


def test_example1_saturation_and_bound():
    delta0, omega = 1.0, 0.05
    m, o = build_example1(delta0, omega)
    tr = epsilon_open(m, o, np.linspace(0, 40, 401))
    target = 2 * omega * delta0 / (2 * delta0 ** 2 + omega ** 2)
    assert saturation_value(tr) == pytest.approx(target, rel=0.02)
    assert tr.violations("bound_exact") == 0
    assert tr.metadata["c"] == pytest.approx(2.0)


def test_example2_slope_and_bound():
    delta0, omega = 1.0, 0.05
    m, o = build_example2(delta0, omega)
    tr = epsilon_open(m, o, np.linspace(0, 20 / omega, 401))
    slope = slope_fit(tr, (2 / omega, 20 / omega))
    assert 0.7 <= slope / (omega ** 2 / (4 * delta0)) <= 1.3
    assert tr.violations("bound_exact") == 0


def test_modified_jump_example2_and_norm_bound():
    delta0, omega = 1.0, 0.02
    m, o = build_example2(delta0, omega)
    split = dfs_projector(m)
    res = build_swt(m.H0, m.V, split, "open_hermitian")
    jt = modified_jump(res.S, m.jumps[0])
    assert op_norm(jt) <= op_norm(m.jumps[0]) * math.expm1(2 * res.t_norm)
    pj = split.P @ jt @ split.P
    c = omega / math.sqrt(2 * delta0)
    target = np.zeros((4, 4), dtype=complex)
    target[3, 2] = 1.0  # |gg><ge| with |e> = index 0
    phase = pj[3, 2] / abs(pj[3, 2])
    assert op_norm(pj - phase * c * target) <= 0.2 * c
    ts = np.linspace(0, delta0 / omega ** 2, 30)
    decay = single_jump_decay(pj, o, ts)
    assert np.allclose(decay, np.exp(-omega ** 2 * ts / (4 * delta0)), rtol=0.05)


def test_modified_jump_trivial_and_singular():
    j = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(modified_jump(np.eye(2), j), 0)
    with pytest.raises(SingularS):
        modified_jump(np.diag([1.0, 0.0]), j)


@given(st.integers(0, 2**63 - 1))
def test_modified_jump_norm_inequality_random(seed):
    m, _ = random_open_model(seed)
    split = dfs_projector(m)
    res = build_swt(m.H0, m.V, split, "open_hermitian")
    jt = modified_jump(res.S, m.jumps[0], s_inv=res.S_inv)
    assert op_norm(jt) <= op_norm(m.jumps[0]) * math.expm1(2 * res.t_norm) * (1 + 1e-9)


def test_slope_and_saturation_helpers():
    ts = np.linspace(0, 10, 101)
    flat = OpenErrorTrace(ts, np.full(101, 0.3), {})
    assert slope_fit(flat, (1, 9)) == pytest.approx(0, abs=1e-12)
    assert saturation_value(flat) == pytest.approx(0.3)
    ramp = OpenErrorTrace(ts, ts, {})
    with pytest.raises(NotSaturated):
        saturation_value(ramp)
    with pytest.raises(InvalidParam):
        slope_fit(ramp, (5, 20))
