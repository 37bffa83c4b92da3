"""The sixteen-tool catalog the solver agent may call.

Each tool is a thin adapter: JSON arguments in, JSON-serializable result out.
Results carry a ``quantities`` map that the final answer is assembled from.
Failures raise :class:`ToolError`, which the ReAct loop turns into an
observation shaped like ``{"error": ..., "current_tool_name": ...,
"current_tool_arg": ...}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..ets import EtsSyntaxError, InvalidRobotIdError, RobotModel, RobotRegistry, UnknownModelError, parse_ets
from ..ik import IKError, IKOptions, ik_solve
from ..kinematics import (
    END_EFFECTOR, WORLD, ee_acceleration_symbolic, ee_velocity_symbolic, fk_symbolic,
    jacobian_symbolic, normalize_frame, to_frame,
)
from ..motion import (
    MotionError, ServoOptions, Trajectory, export_trajectory, quintic_joint_traj,
    simulate_joint_velocity, simulate_servo,
)
from ..spatial import is_pose, orthonormalize
from ..symexpr import to_text

# printed matrices are rounded; anything further from SE(3) than this is refused
PRINTED_TOL = 0.05
MOTION_DURATION = 2.45
MOTION_DT = 0.05


class ToolError(Exception):
    pass


@dataclass
class ToolContext:
    registry: RobotRegistry
    workspace: Path | None = None
    trajectories: list[Trajectory] = field(default_factory=list)
    prefix: str = "run"

    def robot(self, robot_id) -> RobotModel:
        try:
            return self.registry.get(robot_id)
        except InvalidRobotIdError:
            raise ToolError("Invalid robot ID") from None

    def artifact(self, stem: str, suffix: str) -> Path | None:
        if self.workspace is None:
            return None
        self.workspace.mkdir(parents=True, exist_ok=True)
        return self.workspace / f"{self.prefix}-{stem}{suffix}"


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    quantity: str
    fn: Callable[[ToolContext, dict], dict]
    params: tuple[str, ...] = ()


def _matrix(x) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(x)]


def _vec(x) -> list[float]:
    return [float(v) for v in np.asarray(x).reshape(-1)]


def _ets_arg(args: dict):
    raw = args.get("ets")
    if isinstance(raw, list):
        raw = " ".join(raw)
    if not isinstance(raw, str):
        raise ToolError("missing 'ets' argument")
    try:
        return parse_ets(raw)
    except EtsSyntaxError as exc:
        raise ToolError(f"could not parse ETS: {exc}") from None


def _pose_arg(value, what: str) -> np.ndarray:
    try:
        T = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ToolError(f"{what} must be a 4x4 numeric matrix") from None
    if T.shape != (4, 4):
        raise ToolError(f"{what} must be a 4x4 matrix")
    P = orthonormalize(T)
    if np.max(np.abs(P - T)) > PRINTED_TOL or not is_pose(P):
        raise ToolError(f"{what} is not a rigid transform")
    return P


def _q_arg(model: RobotModel, value, what: str = "joint configuration") -> np.ndarray:
    try:
        return model.config(value)
    except (KeyError, ValueError, TypeError) as exc:
        raise ToolError(f"bad {what}: {exc}") from None


def _traj_summary(traj: Trajectory) -> dict:
    recs = traj.records
    last = recs[-1]
    return {"records": len(recs), "t_first": float(recs[0].t), "t_last": float(last.t),
            "q_first": _vec(recs[0].q), "q_last": _vec(last.q),
            "final_position": _vec(last.pose[:3, 3]), "final_error": float(last.error_norm),
            "arrived": bool(traj.arrived),
            "finite": bool(np.all(np.isfinite(traj.qs)))}


# ---------------------------------------------------------------------------
# symbolic


def _sym_fk(ctx, args):
    pose = fk_symbolic(_ets_arg(args))
    return {"quantities": {"fk_symbolic": pose.texts()}}


def _sym_vel(ctx, args):
    return {"quantities": {"velocity": ee_velocity_symbolic(_ets_arg(args)).texts()}}


def _sym_acc(ctx, args):
    return {"quantities": {"acceleration": ee_acceleration_symbolic(_ets_arg(args)).texts()}}


def _sym_jac(ctx, args):
    J = jacobian_symbolic(_ets_arg(args))
    return {"quantities": {"jacobian_symbolic": [[to_text(e) for e in row] for row in J]}}


# ---------------------------------------------------------------------------
# robots


def _create_custom(ctx, args):
    ets = _ets_arg(args)
    consts = {str(k): float(v) for k, v in (args.get("constants") or {}).items()}
    missing = ets.constant_symbols() - set(consts)
    if missing:
        raise ToolError(f"unbound constant(s): {', '.join(sorted(missing))}")
    name = str(args.get("name") or "custom")
    rid = ctx.registry.register(name, ets, consts)
    return {"quantities": {"robot_id": rid}, "joints": ets.n}


def _create_builtin(ctx, args):
    try:
        rid = ctx.registry.register_builtin(str(args.get("name", "")))
    except UnknownModelError as exc:
        raise ToolError(str(exc)) from None
    model = ctx.registry.get(rid)
    return {"quantities": {"robot_id": rid}, "joints": model.n, "name": model.name}


def _fk_numeric(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    configs = args.get("joint_configurations")
    if configs is None:
        configs = [args.get("q")]
    chain = model.compiled()
    mats = [_matrix(chain.fk(_q_arg(model, q))) for q in configs]
    return {"quantities": {"fk": mats}}


def _ik(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    target = _pose_arg(args.get("target"), "target")
    try:
        opts = IKOptions(method=args.get("method", "lm-chan"), seed=int(args.get("seed", 0)))
        res = ik_solve(model, target, q0=args.get("q0"), opts=opts)
    except IKError as exc:
        raise ToolError(str(exc)) from None
    return {"quantities": {"ik": res.to_json()}}


def _jacobian(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    q = _q_arg(model, args.get("q"))
    frame = args.get("frame", "both")
    T, J = model.compiled().fk_jacobian(q)
    frames = [WORLD, END_EFFECTOR] if frame == "both" else [normalize_frame(frame)]
    return {"quantities": {"jacobian": {f: _matrix(to_frame(J, T, f)) for f in frames}}}


# ---------------------------------------------------------------------------
# motion


def _plot(ctx, args, custom: bool):
    model = ctx.robot(args.get("robot_id"))
    if custom == model.builtin:
        which = "plot_robot_motion" if custom else "plot_custom_robot_motion"
        raise ToolError(f"robot {model.name!r} is {'built-in' if model.builtin else 'user-defined'}; use {which}")
    q0 = _q_arg(model, args.get("q_start", "qz"), "start configuration")
    q1 = _q_arg(model, args.get("q_end"), "end configuration")
    duration = float(args.get("duration", MOTION_DURATION))
    traj = quintic_joint_traj(q0, q1, duration, float(args.get("dt", MOTION_DT)), model)
    ctx.trajectories.append(traj)
    out = _traj_summary(traj)
    path = ctx.artifact(f"motion{len(ctx.trajectories)}", ".svg")
    if path is not None:
        export_trajectory(traj, "svg", path, model=model)
        out["path"] = path.name
    return {"quantities": {"motion": out}}


def _servo(ctx, args):
    model = ctx.robot(args.get("robot_id_local", args.get("robot_id")))
    target = _pose_arg(args.get("end_effector_desired_transformation_matrix"), "target")
    q0 = _q_arg(model, args.get("initial_joint_value", "qr"), "initial joint value")
    twist = args.get("dynamic_target_velocity") if args.get("dynamic_target") else None
    try:
        opts = ServoOptions(gain=tuple(args.get("proportional_gain", (1.0,))),
                            velocity_profile=bool(args.get("velocity_profile", False)),
                            target_twist=None if twist is None else tuple(twist),
                            frame=args.get("desired_position_frame", WORLD),
                            max_time=float(args.get("max_time", 10.0)))
    except MotionError as exc:
        raise ToolError(str(exc)) from None
    traj = simulate_servo(model, q0, target, opts)
    ctx.trajectories.append(traj)
    out = _traj_summary(traj)
    out["moving_target"] = twist is not None
    return {"quantities": {"servo": out}}


def _joint_velocity(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    q0 = _q_arg(model, args.get("initial_joint_value", "qz"), "initial joint value")
    try:
        traj = simulate_joint_velocity(model, q0, qdot=args.get("joint_velocity"),
                                       duration=float(args.get("duration", 1.0)),
                                       dt=float(args.get("dt", MOTION_DT)))
    except MotionError as exc:
        raise ToolError(str(exc)) from None
    ctx.trajectories.append(traj)
    return {"quantities": {"joint_velocity": _traj_summary(traj)}}


def _ee_velocity(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    q0 = _q_arg(model, args.get("initial_joint_value", "qr"), "initial joint value")
    frame = normalize_frame(args.get("frame", WORLD))
    try:
        traj = simulate_joint_velocity(model, q0, twist=args.get("ee_velocity"), frame=frame,
                                       duration=float(args.get("duration", 2.0)),
                                       dt=float(args.get("dt", MOTION_DT)))
    except MotionError as exc:
        raise ToolError(str(exc)) from None
    ctx.trajectories.append(traj)
    return {"quantities": {f"ee_velocity:{frame}": _traj_summary(traj)}}


def _quintic(ctx, args):
    model = ctx.robot(args.get("robot_id"))
    q0 = _q_arg(model, args.get("q_start", "qz"), "start configuration")
    q1 = _q_arg(model, args.get("q_end"), "end configuration")
    try:
        traj = quintic_joint_traj(q0, q1, float(args.get("duration", MOTION_DURATION)),
                                  float(args.get("dt", MOTION_DT)), model)
    except MotionError as exc:
        raise ToolError(str(exc)) from None
    ctx.trajectories.append(traj)
    return {"quantities": {"trajectory": _traj_summary(traj)}}


def _export(ctx, args):
    if not ctx.trajectories:
        raise ToolError("no trajectory to export; generate one first")
    fmt = str(args.get("format", "csv")).lower()
    if fmt not in ("csv", "svg"):
        raise ToolError(f"unknown format {fmt!r}")
    traj = ctx.trajectories[-1]
    out = {"format": fmt, "rows": len(traj)}
    path = ctx.artifact("trajectory", "." + fmt)
    if path is not None:
        model = ctx.robot(args["robot_id"]) if fmt == "svg" else None
        export_trajectory(traj, fmt, path, model=model)
        out["path"] = path.name
    return {"quantities": {"export": out}}


TOOLS: dict[str, Tool] = {t.name: t for t in (
    Tool("Symbolic_Forward_Kinematic_ET", "closed-form forward kinematics of an ETS",
         "fk_symbolic", _sym_fk, ("ets",)),
    Tool("Symbolic_EndEffector_Velocity", "symbolic end-effector linear velocity",
         "velocity", _sym_vel, ("ets",)),
    Tool("Symbolic_EndEffector_Acceleration", "symbolic end-effector linear acceleration",
         "acceleration", _sym_acc, ("ets",)),
    Tool("Symbolic_Jacobian", "symbolic world-frame geometric Jacobian",
         "jacobian_symbolic", _sym_jac, ("ets",)),
    Tool("create_custom_userdefined_robot", "register a robot from an ETS and link lengths",
         "robot_id", _create_custom, ("name", "ets", "constants")),
    Tool("create_robotictoolbox_robot", "register a built-in robot (panda, ur3)",
         "robot_id", _create_builtin, ("name",)),
    Tool("forward_kinematics_custom_userdefined_robot", "numeric forward kinematics",
         "fk", _fk_numeric, ("robot_id", "joint_configurations")),
    Tool("inverse_kinematics", "numeric inverse kinematics for a target pose",
         "ik", _ik, ("robot_id", "target", "method", "q0", "seed")),
    Tool("compute_Jacobian", "numeric geometric Jacobian in world and/or end-effector frame",
         "jacobian", _jacobian, ("robot_id", "q", "frame")),
    Tool("plot_custom_robot_motion", "quintic motion between two configurations (user-defined robot)",
         "motion", lambda c, a: _plot(c, a, True), ("robot_id", "q_start", "q_end", "duration")),
    Tool("plot_robot_motion", "quintic motion between two configurations (built-in robot)",
         "motion", lambda c, a: _plot(c, a, False), ("robot_id", "q_start", "q_end", "duration")),
    Tool("simulate_robot_motion_Position_based_Servoing", "position-based servoing to a target pose",
         "servo", _servo,
         ("robot_id_local", "end_effector_desired_transformation_matrix", "initial_joint_value",
          "desired_position_frame", "proportional_gain", "velocity_profile", "dynamic_target",
          "dynamic_target_velocity")),
    Tool("simulate_joint_velocity", "integrate a constant joint velocity",
         "joint_velocity", _joint_velocity, ("robot_id", "initial_joint_value", "joint_velocity", "duration")),
    Tool("simulate_ee_velocity", "integrate a constant end-effector twist",
         "ee_velocity", _ee_velocity, ("robot_id", "initial_joint_value", "ee_velocity", "frame", "duration")),
    Tool("quintic_joint_trajectory", "quintic joint-space trajectory",
         "trajectory", _quintic, ("robot_id", "q_start", "q_end", "duration", "dt")),
    Tool("export_trajectory", "write the latest trajectory as CSV or SVG",
         "export", _export, ("format", "robot_id")),
)}


def quantity_present(tool: str, quantities: dict) -> bool:
    key = TOOLS[tool].quantity
    return key in quantities or any(k.startswith(key + ":") for k in quantities)


def catalog(names=None) -> list[dict]:
    names = list(TOOLS) if names is None else names
    return [{"name": n, "description": TOOLS[n].description, "arguments": list(TOOLS[n].params)}
            for n in names]


def execute_tool(ctx: ToolContext, name: str, args: Any) -> tuple[bool, dict]:
    """Run a tool; returns ``(ok, observation)``, never raises for tool failures."""
    if not isinstance(args, dict):
        args = {}
    try:
        tool = TOOLS[name]
    except KeyError:
        return False, {"error": f"unknown tool {name!r}", "current_tool_name": name,
                       "current_tool_arg": args}
    try:
        return True, tool.fn(ctx, args)
    except (ToolError, KeyError, ValueError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, ToolError) and exc.args else str(exc)
        return False, {"error": msg, "current_tool_name": name, "current_tool_arg": args}
