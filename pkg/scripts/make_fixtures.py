"""Regenerate the bundled text fixtures, scripted-backend tables and benchmark suites.

Run from the repository root after editing this file:

    python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import json
from pathlib import Path

from armsolver.agents.backend import fingerprint
from armsolver.ets import BUILTIN_ETS
from armsolver.fixtures import FIG4_COUNT, describe_chain, fig4_ets_text

ROOT = Path(__file__).resolve().parents[1] / "src" / "armsolver" / "fixtures"


def dump(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def desc(name: str) -> str:
    return (ROOT / name).read_text(encoding="utf-8").strip()


# ---------------------------------------------------------------------------
# descriptions

for k in range(1, FIG4_COUNT + 1):
    (ROOT / "fig4" / f"robot{k}.txt").write_text(describe_chain(fig4_ets_text(k)) + "\n", encoding="utf-8")
for name, ets in BUILTIN_ETS.items():
    p = ROOT / "descriptions" / f"{name}.txt"
    p.parent.mkdir(exist_ok=True)
    p.write_text(describe_chain(ets) + "\n", encoding="utf-8")

extractor = [{"id": f"robot{k}", "text_file": f"fig4/robot{k}.txt", "ets": fig4_ets_text(k)}
             for k in range(1, FIG4_COUNT + 1)]
extractor += [{"id": name, "text_file": f"descriptions/{name}.txt", "ets": ets}
              for name, ets in BUILTIN_ETS.items()]
dump(ROOT / "scripted" / "extractor.json", extractor)

# ---------------------------------------------------------------------------
# printed reference forms

T = ["theta1", "theta2", "theta3"]
S1, S12, S123 = "sin(theta1)", "sin(theta1 + theta2)", "sin(theta1 + theta2 + theta3)"
C1, C12, C123 = (s.replace("sin", "cos") for s in (S1, S12, S123))
D1, D12, D123 = "theta1_dot", "(theta1_dot + theta2_dot)", "(theta1_dot + theta2_dot + theta3_dot)"
A1, A12, A123 = "theta1_ddot", "(theta1_ddot + theta2_ddot)", "(theta1_ddot + theta2_ddot + theta3_ddot)"

PLANAR_PRISMATIC_FK = [
    ["cos(theta1 + theta2)", "-sin(theta1 + theta2)", "0", "L2*cos(theta1) + L3*cos(theta1 + theta2)"],
    ["sin(theta1 + theta2)", "cos(theta1 + theta2)", "0", "L2*sin(theta1) + L3*sin(theta1 + theta2)"],
    ["0", "0", "1", "d1"],
    ["0", "0", "0", "1"],
]
VERTICAL_3R_FK = [
    [C123, "0", "-" + S123, f"L1*{C1} + L2*{C12} + L3*{C123}"],
    ["0", "1", "0", "0"],
    [S123, "0", C123, f"L1*{S1} + L2*{S12} + L3*{S123}"],
    ["0", "0", "0", "1"],
]
VERTICAL_3R_VEL = [
    f"-L1*{D1}*{S1} - L2*{D12}*{S12} - L3*{D123}*{S123}",
    "0",
    f"L1*{D1}*{C1} + L2*{D12}*{C12} + L3*{D123}*{C123}",
]
VERTICAL_3R_ACC = [
    f"-L1*{A1}*{S1} - L2*{A12}*{S12} - L3*{A123}*{S123}"
    f" - L1*{D1}^2*{C1} - L2*{D12}^2*{C12} - L3*{D123}^2*{C123}",
    "0",
    f"-L1*{S1}*{D1}^2 + L1*{C1}*{A1} - L2*{D12}^2*{S12} + L2*{A12}*{C12}"
    f" - L3*{D123}^2*{S123} + L3*{A123}*{C123}",
]

PANDA_FK_Q = [[-0.75, 1, -1, 0, 0, 1, 2], [1, 2, -1, 1, 2, 3, 0]]
PANDA_FK = [
    [[-0.77, 0, -0.64, 0.39], [0.31, 0.87, -0.38, -0.52], [0.56, -0.48, -0.67, 0.66], [0, 0, 0, 1]],
    [[0.85, 0.4, -0.35, 0.09], [0.26, 0.27, 0.93, 0.65], [0.46, -0.88, 0.12, 0.34], [0, 0, 0, 1]],
]
UR3_IK_TARGET = [[0.36, -0.79, 0.5, 0], [0.7, 0.58, 0.41, 0.23], [-0.61, 0.2, 0.76, 0.57], [0, 0, 0, 1]]
SERVO_ROT = [[0.77, -0.47, 0.42], [0.42, 0.87, 0.22], [-0.47, 0.0, 0.87]]


def pose(rot, p):
    return [rot[0] + [p[0]], rot[1] + [p[1]], rot[2] + [p[2]], [0, 0, 0, 1]]


SERVO_STATIC = pose(SERVO_ROT, [0.5, -0.3, 0.7])
SERVO_MOVING = pose(SERVO_ROT, [0.5, 0.5, 0.75])
UR3_MOTION_Q = [-1, -1, -2.01, -1.58, -0.4, -1]

# ---------------------------------------------------------------------------
# bench1: forward kinematics from a textual description

bench1 = {"suite": "bench1-text", "repeats": 3, "cases": []}
for k in range(1, FIG4_COUNT + 1):
    ets = fig4_ets_text(k)
    bench1["cases"].append({"id": f"b1-{k:02d}", "turns": [{
        "query": "Compute the forward kinematics of the following robot. " + desc(f"fig4/robot{k}.txt"),
        "gold": {"routes": ["extractor", "planner"], "ets": ets,
                 "tools": ["Symbolic_Forward_Kinematic_ET"],
                 "checks": [{"kind": "symbolic_fk", "path": "fk_symbolic", "ets": ets}]},
    }]})
dump(ROOT / "bench" / "bench1-text.json", bench1)

# ---------------------------------------------------------------------------
# bench3: multi-step tasks

scripts: dict[str, dict] = {}


def script(query: str, *attempts, omit=()):
    scripts[fingerprint(query)] = {"attempts": [list(a) for a in attempts], "omit": list(omit)}


def call(tool, **arguments):
    return {"tool": tool, "arguments": arguments}


cases = []

# symbolic FK, substitution and a plotted motion for a prismatic-base planar arm
q = ("Find the symbolic forward kinematics of the arm below, then substitute L2 = 0.7 and L3 = 0.5 and "
     "plot the robot motion from the joint configuration [0, 0, 0] to [0.7, 0.5, 0.7]. "
     + desc("fig4/robot7.txt"))
script(q, [call("Symbolic_Forward_Kinematic_ET", ets="$ets"),
           call("create_custom_userdefined_robot", name="planar", ets="$ets",
                constants={"L2": 0.7, "L3": 0.5}),
           call("plot_custom_robot_motion", robot_id="$robot_id", q_start=[0, 0, 0], q_end=[0.7, 0.5, 0.7])])
cases.append({"id": "b3-01", "turns": [{"query": q, "gold": {
    "routes": ["extractor", "planner"], "ets": fig4_ets_text(7),
    "tools": ["Symbolic_Forward_Kinematic_ET", "create_custom_userdefined_robot", "plot_custom_robot_motion"],
    "checks": [{"kind": "symbolic", "path": "fk_symbolic", "expected": PLANAR_PRISMATIC_FK},
               {"kind": "equals", "path": "motion.records", "expected": 50},
               {"kind": "approx", "path": "motion.t_last", "expected": 2.45, "tol": 1e-12},
               {"kind": "approx", "path": "motion.q_last", "expected": [0.7, 0.5, 0.7], "tol": 1e-12}]}}]})

# position-based servoing of a built-in arm to a static target
q = ("Create a Panda robot and start it in the ready joint configuration. Using a position controller "
     "with a proportional gain of [3, 3, 3, 3, 3] in the world frame, simulate the motion from the ready "
     f"configuration to the end-effector target {json.dumps(SERVO_STATIC)}, with a velocity profile applied.")
script(q, [call("create_robotictoolbox_robot", name="panda"),
           call("simulate_robot_motion_Position_based_Servoing", robot_id_local="$robot_id",
                end_effector_desired_transformation_matrix=SERVO_STATIC, initial_joint_value="qr",
                desired_position_frame="world", proportional_gain=[3, 3, 3, 3, 3], velocity_profile=True)])
cases.append({"id": "b3-02", "turns": [{"query": q, "gold": {
    "routes": ["planner"],
    "tools": ["create_robotictoolbox_robot", "simulate_robot_motion_Position_based_Servoing"],
    "checks": [{"kind": "equals", "path": "servo.arrived", "expected": True},
               {"kind": "le", "path": "servo.final_error", "expected": 1e-3}]}}]})

# describe-and-create a six-joint arm, then inverse kinematics and a plotted motion
q1 = "Create this robot for me. " + desc("descriptions/ur3.txt")
q2 = ("Now solve the inverse kinematics of this robot for the end-effector pose "
      f"{json.dumps(UR3_IK_TARGET)}. Take the resulting joint values as the pick-up configuration and "
      "plot the motion from the zero configuration to it.")
script(q2, [call("inverse_kinematics", robot_id="$robot_id", target=UR3_IK_TARGET, method="lm-chan"),
            call("plot_custom_robot_motion", robot_id="$robot_id", q_start="qz", q_end="$ik_q")])
cases.append({"id": "b3-03", "turns": [
    {"query": q1, "gold": {"routes": ["extractor", "planner"], "ets": BUILTIN_ETS["ur3"],
                           "tools": ["create_custom_userdefined_robot"],
                           "checks": [{"kind": "present", "path": "robot_id"}]}},
    {"query": q2, "gold": {"routes": ["planner"], "tools": ["inverse_kinematics", "plot_custom_robot_motion"],
                           "checks": [{"kind": "equals", "path": "ik.success", "expected": True},
                                      {"kind": "ik_pose", "path": "ik.q", "ets": BUILTIN_ETS["ur3"],
                                       "target": UR3_IK_TARGET, "tol": 0.01},
                                      {"kind": "equals", "path": "motion.records", "expected": 50}]}},
]})

# describe-and-create a seven-joint arm, then numeric FK and a plotted motion
q1 = "Create this robot for me. " + desc("descriptions/panda.txt")
q2 = ("Now compute the forward kinematics of the robot for the two joint configurations "
      f"{json.dumps(PANDA_FK_Q[0])} and {json.dumps(PANDA_FK_Q[1])}. Then plot the robot's motion from "
      "the first configuration to the second.")
script(q2, [call("forward_kinematics_custom_userdefined_robot", robot_id="$robot_id",
                 joint_configurations=PANDA_FK_Q),
            call("plot_custom_robot_motion", robot_id="$robot_id", q_start=PANDA_FK_Q[0], q_end=PANDA_FK_Q[1])])
cases.append({"id": "b3-04", "turns": [
    {"query": q1, "gold": {"routes": ["extractor", "planner"], "ets": BUILTIN_ETS["panda"],
                           "tools": ["create_custom_userdefined_robot"],
                           "checks": [{"kind": "present", "path": "robot_id"}]}},
    {"query": q2, "gold": {"routes": ["planner"],
                           "tools": ["forward_kinematics_custom_userdefined_robot", "plot_custom_robot_motion"],
                           "checks": [{"kind": "approx", "path": "fk", "expected": PANDA_FK, "tol": 0.01},
                                      {"kind": "approx", "path": "motion.q_last", "expected": PANDA_FK_Q[1],
                                       "tol": 1e-12}]}},
]})

# task delivered in a text attachment
attachment = ("Build a UR3 robot and plot its motion from the zero joint configuration to "
              f"{json.dumps(UR3_MOTION_Q)}. Then report the Jacobian in both the world frame and the "
              "end-effector frame at that configuration.\n")
(ROOT / "bench" / "attachments").mkdir(parents=True, exist_ok=True)
(ROOT / "bench" / "attachments" / "b3-05.txt").write_text(attachment, encoding="utf-8")
q = "Solve the task described in the attached text file."
script(q, [call("create_robotictoolbox_robot", name="ur3"),
           call("plot_robot_motion", robot_id="$robot_id", q_start="qz", q_end=UR3_MOTION_Q),
           call("compute_Jacobian", robot_id="$robot_id", q=UR3_MOTION_Q, frame="both")])
cases.append({"id": "b3-05", "turns": [{"query": q, "attachment": "attachments/b3-05.txt", "gold": {
    "routes": ["retriever", "planner"],
    "tools": ["create_robotictoolbox_robot", "plot_robot_motion", "compute_Jacobian"],
    "checks": [{"kind": "jacobian", "path": "jacobian.world", "ets": BUILTIN_ETS["ur3"], "q": UR3_MOTION_Q,
                "frame": "world", "tol": 1e-5},
               {"kind": "jacobian", "path": "jacobian.end-effector", "ets": BUILTIN_ETS["ur3"],
                "q": UR3_MOTION_Q, "frame": "end-effector", "tol": 1e-5},
               {"kind": "approx", "path": "motion.q_last", "expected": UR3_MOTION_Q, "tol": 1e-12}]}}]})

# symbolic velocity and acceleration of a three-joint vertical arm
q = "Compute the end-effector velocity and acceleration of the arm described here. " + desc("fig4/robot9.txt")
cases.append({"id": "b3-06", "turns": [{"query": q, "gold": {
    "routes": ["extractor", "planner"], "ets": fig4_ets_text(9),
    "tools": ["Symbolic_Forward_Kinematic_ET", "Symbolic_EndEffector_Velocity",
              "Symbolic_EndEffector_Acceleration"],
    "checks": [{"kind": "symbolic", "path": "fk_symbolic", "expected": VERTICAL_3R_FK},
               {"kind": "symbolic", "path": "velocity", "expected": VERTICAL_3R_VEL},
               {"kind": "symbolic", "path": "acceleration", "expected": VERTICAL_3R_ACC}]}}]})

# moving-target servoing where the first attempt addresses the robot by name
q = ("Create a panda robot and start it in the ready joint configuration. Then simulate its motion toward "
     f"the end-effector pose {json.dumps(SERVO_MOVING)} in the world frame with a position controller of "
     "proportional gain [3, 3, 3, 3, 3], while the target moves with a velocity of [0.15, 0.15, 0.05, 0, 0, 0].")
servo_args = dict(end_effector_desired_transformation_matrix=SERVO_MOVING, initial_joint_value="qr",
                  desired_position_frame="world", proportional_gain=[3, 3, 3, 3, 3, 3],
                  velocity_profile=True, dynamic_target=True,
                  dynamic_target_velocity=[0.15, 0.15, 0.05, 0, 0, 0])
script(q,
       [call("create_robotictoolbox_robot", name="panda"),
        call("simulate_robot_motion_Position_based_Servoing", robot_id_local="panda", **servo_args)],
       [call("simulate_robot_motion_Position_based_Servoing", robot_id_local="$robot_id", **servo_args)])
cases.append({"id": "b3-07", "turns": [{"query": q, "gold": {
    "routes": ["planner"],
    "tools": ["create_robotictoolbox_robot", "simulate_robot_motion_Position_based_Servoing"],
    "checks": [{"kind": "equals", "path": "servo.finite", "expected": True},
               {"kind": "equals", "path": "servo.moving_target", "expected": True},
               {"kind": "equals", "path": "servo.records", "expected": 201}]}}]})

# end-effector velocity simulated in both frames
q = ("Create the Panda robot and, from the ready joint configuration, simulate its motion with an "
     "end-effector velocity of [0.04, 0, 0, 0, 0, 0.5] in the end-effector frame. Then simulate the same "
     "end-effector velocity again in the world frame.")
twist = [0.04, 0, 0, 0, 0, 0.5]
script(q, [call("create_robotictoolbox_robot", name="panda"),
           call("simulate_ee_velocity", robot_id="$robot_id", initial_joint_value="qr", ee_velocity=twist,
                frame="ee"),
           call("simulate_ee_velocity", robot_id="$robot_id", initial_joint_value="qr", ee_velocity=twist,
                frame="world")])
cases.append({"id": "b3-08", "turns": [{"query": q, "gold": {
    "routes": ["planner"], "tools": ["create_robotictoolbox_robot", "simulate_ee_velocity"],
    "checks": [{"kind": "equals", "path": "ee_velocity:end-effector.finite", "expected": True},
               {"kind": "equals", "path": "ee_velocity:world.finite", "expected": True},
               {"kind": "approx", "path": "ee_velocity:world.t_last", "expected": 2.0, "tol": 1e-12}]}}]})

# derived: symbolic Jacobian
q = "Derive the symbolic Jacobian of this arm. " + desc("fig4/robot1.txt")
cases.append({"id": "b3-09", "turns": [{"query": q, "gold": {
    "routes": ["extractor", "planner"], "ets": fig4_ets_text(1), "tools": ["Symbolic_Jacobian"],
    "checks": [{"kind": "symbolic_jacobian", "path": "jacobian_symbolic", "ets": fig4_ets_text(1),
                "tol": 1e-6}]}}]})

# derived: quintic trajectory exported to CSV
q_end = [0.5, -1, 1, 0, 0.5, 0]
q = ("Create a UR3 robot, generate a quintic trajectory from the zero configuration to "
     f"{json.dumps(q_end)} over 2 seconds, and export it to CSV.")
script(q, [call("create_robotictoolbox_robot", name="ur3"),
           call("quintic_joint_trajectory", robot_id="$robot_id", q_start="qz", q_end=q_end, duration=2.0),
           call("export_trajectory", robot_id="$robot_id", format="csv")])
cases.append({"id": "b3-10", "turns": [{"query": q, "gold": {
    "routes": ["planner"],
    "tools": ["create_robotictoolbox_robot", "quintic_joint_trajectory", "export_trajectory"],
    "checks": [{"kind": "equals", "path": "trajectory.records", "expected": 41},
               {"kind": "approx", "path": "trajectory.q_last", "expected": q_end, "tol": 1e-12},
               {"kind": "equals", "path": "export.format", "expected": "csv"},
               {"kind": "equals", "path": "export.rows", "expected": 41}]}}]})

dump(ROOT / "bench" / "bench3-tasks.json", {"suite": "bench3-tasks", "repeats": 3, "cases": cases})
dump(ROOT / "scripted" / "robosolver.json", dict(sorted(scripts.items())))
print(f"wrote {len(bench1['cases'])} + {len(cases)} cases, {len(scripts)} scripts")
