import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from armsolver.ets import builtin_model
from armsolver.motion import (
    MotionError, ServoOptions, broadcast_gain, damped_pinv, export_trajectory, moving_target_report,
    p_servo, quintic_at, quintic_joint_traj, quintic_scaling, read_csv, rrmc_step, simulate_joint_velocity,
    simulate_servo,
)
from armsolver.spatial import transl


def test_broadcast_gain():
    np.testing.assert_array_equal(broadcast_gain([3]), [3] * 6)
    np.testing.assert_array_equal(broadcast_gain([1, 2, 3, 4, 5]), [1, 2, 3, 4, 5, 5])
    for bad in ([], [1] * 7, [0], [-1, 2]):
        with pytest.raises(MotionError):
            broadcast_gain(bad)


def test_p_servo_scales_error():
    nu, arrived = p_servo(np.eye(4), transl(0.1, 0, 0), [2.0])
    np.testing.assert_allclose(nu.v, [0.2, 0, 0])
    assert not arrived
    _, arrived = p_servo(np.eye(4), transl(1e-4, 0, 0), [1.0])
    assert arrived


def test_damped_pinv_regular_and_singular():
    J = np.array([[1.0, 0], [0, 2.0], [0, 0]])
    P, damped = damped_pinv(J)
    assert not damped
    np.testing.assert_allclose(P, np.linalg.pinv(J))
    P, damped = damped_pinv(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert damped and np.all(np.isfinite(P))


def test_rrmc_step_reproduces_twist(rng):
    model = builtin_model("panda")
    q = model.config("qr")
    nu = np.array([0.05, -0.02, 0.01, 0.1, 0, 0.05])
    qd = rrmc_step(model, q, nu)
    _, J = model.compiled().fk_jacobian(q)
    np.testing.assert_allclose(J @ qd, nu, atol=1e-10)


@pytest.mark.parametrize("robot", ["panda", "ur3"])
def test_servo_static_target_arrives(robot):
    model = builtin_model(robot)
    rng = np.random.default_rng(3)
    target = model.compiled().fk(model.config("qr") + rng.uniform(-0.4, 0.4, model.n))
    traj = simulate_servo(model, "qr", target, ServoOptions(gain=(3.0,)))
    assert traj.arrived
    assert traj.records[-1].error_norm <= 1e-3
    assert np.all(np.diff(traj.errors) <= 1e-12)


def test_servo_ee_frame_also_arrives():
    model = builtin_model("ur3")
    target = model.compiled().fk(model.config("qr") + 0.2)
    traj = simulate_servo(model, "qr", target, ServoOptions(gain=(2.0,), frame="ee"))
    assert traj.arrived


def test_velocity_profile_ramps_first_steps():
    model = builtin_model("panda")
    target = model.compiled().fk(model.config("qr") + 0.3)
    plain = simulate_servo(model, "qr", target, ServoOptions(gain=(1.0,)))
    ramped = simulate_servo(model, "qr", target, ServoOptions(gain=(1.0,), velocity_profile=True))
    np.testing.assert_allclose(ramped.records[0].qdot, plain.records[0].qdot * 0.1, atol=1e-12)
    assert ramped.arrived


def test_moving_target_runs_to_max_time_and_tracks():
    model = builtin_model("panda")
    target = model.compiled().fk(model.config("qr"))
    tw = (0.02, 0.0, 0.0, 0, 0, 0)
    traj = simulate_servo(model, "qr", target, ServoOptions(gain=(3.0,), target_twist=tw, max_time=2.0))
    assert len(traj) == 41
    rep = moving_target_report(traj, target, tw)
    assert rep["finite"]
    # steady lag of a proportional tracker is speed over gain
    assert traj.errors[-1] == pytest.approx(0.02 / 3.0, rel=0.05)


def test_joint_velocity_constant_rate_exact():
    model = builtin_model("ur3")
    qd = np.array([0.1, -0.2, 0.3, 0, 0.05, -0.1])
    traj = simulate_joint_velocity(model, "qz", qdot=qd, duration=1.0, dt=0.05)
    assert len(traj) == 21
    np.testing.assert_allclose(traj.records[-1].q, qd * 1.0, atol=1e-15)


def test_ee_velocity_world_frame_moves_along_x():
    model = builtin_model("panda")
    traj = simulate_joint_velocity(model, "qr", twist=[0.04, 0, 0, 0, 0, 0], duration=1.0, dt=0.01)
    d = traj.records[-1].pose[:3, 3] - traj.records[0].pose[:3, 3]
    np.testing.assert_allclose(d, [0.04, 0, 0], atol=1e-3)
    with pytest.raises(MotionError):
        simulate_joint_velocity(model, "qr")
    with pytest.raises(MotionError):
        simulate_joint_velocity(model, "qr", qdot=[0] * 7, twist=[0] * 6)


def test_quintic_boundaries_and_record_count():
    q0, q1 = np.zeros(3), np.array([0.7, 0.5, 0.7])
    traj = quintic_joint_traj(q0, q1, 2.45, 0.05)
    assert len(traj) == 50
    assert traj.records[0].t == 0.0 and traj.records[-1].t == 2.45
    np.testing.assert_array_equal(traj.records[0].q, q0)
    np.testing.assert_array_equal(traj.records[-1].q, q1)
    np.testing.assert_allclose(traj.records[0].qdot, 0)
    np.testing.assert_allclose(traj.records[-1].qdot, 0, atol=1e-15)


@given(st.floats(0.0, 1.0))
def test_quintic_scaling_symmetric_and_monotone(tau):
    assert quintic_scaling(tau) + quintic_scaling(1 - tau) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= quintic_scaling(tau) <= 1.0
    assert quintic_scaling(min(1.0, tau + 1e-3)) >= quintic_scaling(tau)


def test_quintic_at_midpoint_and_clamps():
    q0, q1 = np.array([0.0, 1.0]), np.array([2.0, -1.0])
    np.testing.assert_allclose(quintic_at(q0, q1, 2.0, 1.0), [1.0, 0.0])
    np.testing.assert_array_equal(quintic_at(q0, q1, 2.0, -1), q0)
    np.testing.assert_array_equal(quintic_at(q0, q1, 2.0, 9), q1)
    with pytest.raises(MotionError):
        quintic_joint_traj(q0, q1[:1], 1.0)


def test_csv_export_round_trip(tmp_path):
    model = builtin_model("ur3")
    traj = quintic_joint_traj(model.config("qz"), model.config("qr"), 1.0, 0.1, model)
    path = export_trajectory(traj, "csv", tmp_path / "t.csv")
    header, data = read_csv(path)
    assert header == ["t", "q0", "q1", "q2", "q3", "q4", "q5", "x", "y", "z", "err"]
    assert data.shape == (11, 11)
    np.testing.assert_array_equal(data[:, 1:7], traj.qs)
    assert (tmp_path / "t.csv.json").exists()


def test_svg_export_is_well_formed(tmp_path):
    model = builtin_model("panda")
    traj = quintic_joint_traj(model.config("qz"), model.config("qr"), 2.45, 0.05, model)
    path = export_trajectory(traj, "svg", tmp_path / "m.svg", model=model, every=10)
    root = ET.parse(path).getroot()
    groups = root.findall("{http://www.w3.org/2000/svg}g")
    assert len(groups) == 6  # records 0, 10, 20, 30, 40 and the last
    with pytest.raises(MotionError):
        export_trajectory(traj, "svg", tmp_path / "x.svg")
    with pytest.raises(MotionError):
        export_trajectory(traj, "png", tmp_path / "x.png")
