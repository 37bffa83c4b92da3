import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from armsolver.ets import builtin_model, parse_ets
from armsolver.fixtures import fig4_ets, fixture_constants
from armsolver.kinematics import (
    compile_ets, ee_acceleration_symbolic, ee_velocity_symbolic, fk_numeric, fk_symbolic, jacobian,
    jacobian_symbolic, joint_origins, normalize_frame, symbol_bindings, to_frame,
)
from armsolver.symexpr import evaluate


def _fd_world_jacobian(chain, q, h=1e-6):
    T0 = chain.fk(q)
    J = np.zeros((6, chain.n))
    for j in range(chain.n):
        dq = np.zeros(chain.n)
        dq[j] = h
        Tp, Tm = chain.fk(q + dq), chain.fk(q - dq)
        J[:3, j] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        W = (Tp[:3, :3] - Tm[:3, :3]) / (2 * h) @ T0[:3, :3].T
        J[3:, j] = [W[2, 1], W[0, 2], W[1, 0]]
    return J


def test_single_rotation_and_translation():
    T = fk_numeric(parse_ets("Rz(q1) tx(L1)"), [np.pi / 2], {"L1": 2.0})
    np.testing.assert_allclose(T[:3, 3], [0, 2, 0], atol=1e-15)


def test_flipped_joint_negates_angle():
    a = fk_numeric(parse_ets("Ry(-q1) tx(1)"), [0.4])
    b = fk_numeric(parse_ets("Ry(q1) tx(1)"), [-0.4])
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_prismatic_joint_translates():
    T = fk_numeric(parse_ets("tz(d1) tx(d2)"), [0.3, -0.2])
    np.testing.assert_allclose(T[:3, 3], [-0.2, 0, 0.3])


def test_unbound_constant_is_reported():
    with pytest.raises(KeyError, match="L1"):
        compile_ets(parse_ets("Rz(q1) tx(L1)"))


def test_wrong_joint_count():
    with pytest.raises(ValueError):
        builtin_model("ur3").compiled().fk(np.zeros(5))


def test_symbolic_matches_numeric_for_fixture_chains(rng):
    for k in range(1, 11):
        ets = fig4_ets(k)
        consts = fixture_constants(ets)
        pose = fk_symbolic(ets)
        for _ in range(5):
            q = rng.uniform(-np.pi, np.pi, ets.n)
            np.testing.assert_allclose(pose.evaluate(symbol_bindings(ets, q, constants=consts)),
                                       fk_numeric(ets, q, consts), atol=1e-12)


def test_symbolic_panda_has_exact_pi_rotation(rng):
    ets = builtin_model("panda").ets
    q = rng.uniform(-1, 1, 7)
    np.testing.assert_allclose(fk_symbolic(ets).evaluate(symbol_bindings(ets, q)), fk_numeric(ets, q),
                               atol=1e-12)


def test_symbolic_jacobian_matches_numeric(rng):
    ets = fig4_ets(1)
    consts = fixture_constants(ets)
    Js = jacobian_symbolic(ets)
    q = rng.uniform(-np.pi, np.pi, ets.n)
    b = symbol_bindings(ets, q, constants=consts)
    val = np.array([[evaluate(e, b) for e in row] for row in Js])
    np.testing.assert_allclose(val, jacobian(ets, q, consts), atol=1e-12)


def test_velocity_is_jacobian_times_rates(rng):
    ets = fig4_ets(9)
    consts = fixture_constants(ets)
    q, qd = rng.uniform(-2, 2, 3), rng.uniform(-1, 1, 3)
    v = ee_velocity_symbolic(ets).evaluate(symbol_bindings(ets, q, qd, constants=consts))
    np.testing.assert_allclose(v, jacobian(ets, q, consts)[:3] @ qd, atol=1e-12)


def test_acceleration_matches_finite_difference(rng):
    ets = fig4_ets(2)
    consts = fixture_constants(ets)
    q, qd, qdd = rng.uniform(-2, 2, 3), rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    vel = ee_velocity_symbolic(ets)
    h = 1e-6

    def v_at(t):
        return vel.evaluate(symbol_bindings(ets, q + qd * t + 0.5 * qdd * t * t, qd + qdd * t, constants=consts))

    fd = (v_at(h) - v_at(-h)) / (2 * h)
    a = ee_acceleration_symbolic(ets).evaluate(symbol_bindings(ets, q, qd, qdd, constants=consts))
    np.testing.assert_allclose(a, fd, atol=1e-6)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_ur3_jacobian_against_finite_difference(q):
    chain = builtin_model("ur3").compiled()
    q = np.asarray(q)
    _, J = chain.fk_jacobian(q)
    np.testing.assert_allclose(J, _fd_world_jacobian(chain, q), atol=1e-6)


def test_frame_change_is_block_rotation(rng):
    chain = builtin_model("panda").compiled()
    q = rng.uniform(-1, 1, 7)
    T, J = chain.fk_jacobian(q)
    R = T[:3, :3]
    B = np.zeros((6, 6))
    B[:3, :3] = B[3:, 3:] = R.T
    np.testing.assert_allclose(to_frame(J, T, "ee"), B @ J, atol=1e-12)
    assert normalize_frame("EE") == "end-effector"
    with pytest.raises(ValueError):
        normalize_frame("tool")


def test_joint_origins_end_at_tool():
    ets = builtin_model("ur3").ets
    q = np.linspace(-1, 1, 6)
    pts = joint_origins(ets, q)
    assert pts.shape == (len(ets) + 1, 3)
    np.testing.assert_allclose(pts[-1], fk_numeric(ets, q)[:3, 3], atol=1e-14)
