"""Resolved-rate control, position servoing and joint-space trajectories.

Everything integrates with explicit Euler steps.  Trajectories export to CSV
(``t,q0..qn-1,x,y,z,err``), to an SVG of link polylines, and to a JSON
metadata sidecar that echoes the options used.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .ets import RobotModel
from .ik import Twist, pose_error
from .kinematics import WORLD, joint_origins, normalize_frame, to_frame
from .spatial import check_pose, rot_exp

DAMPING = 1e-6
DAMP_BELOW = 1e-4
RAMP_TIME = 0.5


class MotionError(ValueError):
    pass


def broadcast_gain(gain) -> np.ndarray:
    """Pad a gain vector to 6 entries by repeating its last value."""
    g = np.atleast_1d(np.asarray(gain, dtype=float)).reshape(-1)
    if g.size == 0 or g.size > 6:
        raise MotionError("gain must have 1 to 6 entries")
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise MotionError("gains must be positive")
    return np.concatenate([g, np.full(6 - g.size, g[-1])])


@dataclass
class ServoOptions:
    gain: tuple[float, ...] = (1.0,)
    arrive_threshold: float = 1e-3
    dt: float = 0.05
    max_time: float = 10.0
    velocity_profile: bool = False
    target_twist: tuple[float, ...] | None = None
    frame: str = WORLD

    def __post_init__(self):
        self.gain = tuple(float(x) for x in broadcast_gain(self.gain))
        if self.dt <= 0 or self.max_time < 0:
            raise MotionError("dt must be positive and max_time non-negative")
        if self.arrive_threshold < 0:
            raise MotionError("arrive_threshold must be non-negative")
        if self.target_twist is not None:
            tw = tuple(float(x) for x in self.target_twist)
            if len(tw) != 6:
                raise MotionError("target_twist must have 6 entries")
            self.target_twist = tw
        self.frame = normalize_frame(self.frame)

    def to_json(self) -> dict:
        d = asdict(self)
        d["gain"] = list(self.gain)
        d["target_twist"] = None if self.target_twist is None else list(self.target_twist)
        d["ramp_time"] = RAMP_TIME if self.velocity_profile else 0.0
        return d


@dataclass
class TrajectoryRecord:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    pose: np.ndarray
    error_norm: float
    damped: bool = False


@dataclass
class Trajectory:
    records: list[TrajectoryRecord] = field(default_factory=list)
    arrived: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def qs(self) -> np.ndarray:
        return np.array([r.q for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error_norm for r in self.records])


def p_servo(current, desired, gain, threshold: float = 1e-3) -> tuple[Twist, bool]:
    """Proportional twist towards ``desired``; also reports arrival."""
    e = pose_error(current, desired)
    k = broadcast_gain(gain)
    nu = k * e.vector
    return Twist(nu[:3], nu[3:]), e.norm() <= threshold


def damped_pinv(J: np.ndarray) -> tuple[np.ndarray, bool]:
    """SVD pseudo-inverse, damped when the smallest singular value is tiny."""
    m, n = J.shape
    if n == 0:
        return np.zeros((0, m)), False
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    damped = bool(s.size and s.min() < DAMP_BELOW)
    if damped:
        inv = s / (s * s + DAMPING)
    else:
        inv = 1.0 / s
    return (Vt.T * inv) @ U.T, damped


def _rates(model: RobotModel, q, nu, frame: str):
    T, J = model.compiled().fk_jacobian(q)
    P, damped = damped_pinv(to_frame(J, T, frame))
    return P @ nu, damped


def rrmc_step(model: RobotModel, q, nu, frame: str = WORLD) -> np.ndarray:
    """Joint rates realizing the twist ``nu`` (resolved-rate control)."""
    nu = nu.vector if isinstance(nu, Twist) else np.asarray(nu, dtype=float)
    if nu.shape != (6,) or not np.all(np.isfinite(nu)):
        raise MotionError("twist must be a finite 6-vector")
    return _rates(model, model.config(q), nu, frame)[0]


def _advance(D: np.ndarray, twist: np.ndarray, dt: float) -> np.ndarray:
    out = D.copy()
    out[:3, 3] += twist[:3] * dt
    out[:3, :3] = rot_exp(twist[3:] * dt) @ D[:3, :3]
    return out


def simulate_servo(model: RobotModel, q0, target, opts: ServoOptions | None = None) -> Trajectory:
    """Drive the end effector to ``target`` by p_servo + RRMC.

    A static target ends the run on arrival.  A moving target (``opts.target_twist``)
    is tracked until ``max_time`` and ``arrived`` reflects the final record.
    """
    opts = opts or ServoOptions()
    q = model.config(q0).copy()
    D = check_pose(target, "target").copy()
    chain = model.compiled()
    gain = np.asarray(opts.gain)
    tw = None if opts.target_twist is None else np.asarray(opts.target_twist)
    steps = int(round(opts.max_time / opts.dt))
    traj = Trajectory(meta={"kind": "servo", "options": opts.to_json()})
    for k in range(steps + 1):
        t = k * opts.dt
        T, J = chain.fk_jacobian(q)
        e = pose_error(T, D)
        err = e.norm()
        if tw is None and err <= opts.arrive_threshold:
            traj.records.append(TrajectoryRecord(t, q.copy(), np.zeros_like(q), T, err))
            traj.arrived = True
            break
        nu = gain * e.vector
        if opts.velocity_profile:
            nu = nu * min(1.0, (k + 1) * opts.dt / RAMP_TIME)
        if opts.frame != WORLD:
            nu = np.concatenate([T[:3, :3].T @ nu[:3], T[:3, :3].T @ nu[3:]])
        P, damped = damped_pinv(to_frame(J, T, opts.frame))
        qd = P @ nu
        traj.records.append(TrajectoryRecord(t, q.copy(), qd, T, err, damped))
        if k == steps:
            # a moving target is tracked to the end; arrival is judged there
            traj.arrived = err <= opts.arrive_threshold
            break
        q = q + qd * opts.dt
        if tw is not None:
            D = _advance(D, tw, opts.dt)
    return traj


def simulate_joint_velocity(model: RobotModel, q0, qdot=None, twist=None, frame: str = WORLD,
                            duration: float = 1.0, dt: float = 0.05) -> Trajectory:
    """Integrate a constant joint rate or a constant end-effector twist."""
    if (qdot is None) == (twist is None):
        raise MotionError("supply exactly one of qdot or twist")
    if dt <= 0 or duration < 0:
        raise MotionError("dt must be positive and duration non-negative")
    frame = normalize_frame(frame)
    q = model.config(q0).copy()
    chain = model.compiled()
    if qdot is not None:
        qd_const = np.asarray(qdot, dtype=float).reshape(-1)
        if qd_const.shape[0] != q.shape[0]:
            raise MotionError(f"qdot has {qd_const.shape[0]} entries, robot has {q.shape[0]} joints")
    else:
        nu = twist.vector if isinstance(twist, Twist) else np.asarray(twist, dtype=float)
        if nu.shape != (6,):
            raise MotionError("twist must be a 6-vector")
    steps = int(round(duration / dt))
    traj = Trajectory(meta={"kind": "velocity", "frame": frame, "duration": duration, "dt": dt,
                            "qdot": None if qdot is None else [float(x) for x in qd_const],
                            "twist": None if twist is None else [float(x) for x in nu]})
    q_start = q.copy()
    for k in range(steps + 1):
        T, J = chain.fk_jacobian(q)
        if qdot is not None:
            qd, damped = qd_const, False
        else:
            P, damped = damped_pinv(to_frame(J, T, frame))
            qd = P @ nu
        traj.records.append(TrajectoryRecord(k * dt, q.copy(), qd.copy(), T, 0.0, damped))
        if k == steps:
            break
        if qdot is not None:
            # closed form avoids summation drift for a constant rate
            q = q_start + qd_const * ((k + 1) * dt)
        else:
            q = q + qd * dt
    return traj


def quintic_scaling(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)


def quintic_joint_traj(q0, q1, duration: float, dt: float = 0.05,
                       model: RobotModel | None = None) -> Trajectory:
    """Rest-to-rest quintic interpolation sampled at ``t_k = k * duration / N``.

    ``N = round(duration / dt)`` and ``k = 0..N``, so the first record is
    ``q0`` at ``t = 0`` and the last is exactly ``q1`` at ``t = duration``.
    """
    q0 = np.asarray(q0, dtype=float).reshape(-1)
    q1 = np.asarray(q1, dtype=float).reshape(-1)
    if q0.shape != q1.shape:
        raise MotionError(f"length mismatch: {q0.shape[0]} vs {q1.shape[0]}")
    if duration <= 0 or dt <= 0:
        raise MotionError("duration and dt must be positive")
    steps = max(1, int(round(duration / dt)))
    chain = model.compiled() if model is not None else None
    dq = q1 - q0
    traj = Trajectory(meta={"kind": "quintic", "duration": duration, "dt": dt,
                            "q0": q0.tolist(), "q1": q1.tolist()})
    for k in range(steps + 1):
        if k == steps:
            t, q = float(duration), q1.copy()
        else:
            t = k * duration / steps
            q = q0 + quintic_scaling(t / duration) * dq
        tau = t / duration
        sd = 30.0 * tau ** 2 * (1.0 - tau) ** 2 / duration
        pose = chain.fk(q) if chain is not None else np.eye(4)
        traj.records.append(TrajectoryRecord(t, q, sd * dq, pose, 0.0))
    traj.arrived = True
    return traj


def quintic_at(q0, q1, duration: float, t: float) -> np.ndarray:
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    if t >= duration:
        return q1.copy()
    if t <= 0:
        return q0.copy()
    return q0 + quintic_scaling(t / duration) * (q1 - q0)


# ---------------------------------------------------------------------------
# export

_PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def export_trajectory(traj: Trajectory, fmt: str, path, model: RobotModel | None = None,
                      every: int = 5, plane: str = "xz", metadata: bool = True) -> Path:
    """Write ``traj`` as ``csv`` or ``svg``; a ``.json`` sidecar holds the metadata."""
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "csv":
        _write_csv(traj, path)
    elif fmt == "svg":
        if model is None:
            raise MotionError("svg export needs the robot model")
        _write_svg(traj, path, model, every, plane)
    else:
        raise MotionError(f"unknown format {fmt!r} (use csv or svg)")
    if metadata:
        side = path.with_suffix(path.suffix + ".json")
        meta = dict(traj.meta, records=len(traj), arrived=traj.arrived, format=fmt)
        side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(traj: Trajectory, path: Path) -> None:
    n = traj.records[0].q.shape[0] if traj.records else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *(f"q{i}" for i in range(n)), "x", "y", "z", "err"])
        for r in traj.records:
            w.writerow([repr(float(r.t)), *(repr(float(x)) for x in r.q),
                        *(repr(float(x)) for x in r.pose[:3, 3]), repr(float(r.error_norm))])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header, np.array([[float(x) for x in row] for row in body]).reshape(len(body), len(header))


def _write_svg(traj: Trajectory, path: Path, model: RobotModel, every: int, plane: str) -> None:
    if plane not in _PLANES:
        raise MotionError(f"plane must be one of {', '.join(_PLANES)}")
    a, b = _PLANES[plane]
    recs = traj.records
    idx = sorted({0, len(recs) - 1, *range(0, len(recs), max(1, every))}) if recs else []
    frames = [joint_origins(model.ets, recs[i].q, model.constants)[:, [a, b]] for i in idx]
    pts = np.vstack(frames) if frames else np.zeros((1, 2))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    size, pad = 400.0, 20.0
    scale = (size - 2 * pad) / span

    def xy(p):
        # SVG y grows downward
        return pad + (p[0] - lo[0]) * scale, size - pad - (p[1] - lo[1]) * scale

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:g}" '
           f'height="{size:g}" viewBox="0 0 {size:g} {size:g}">',
           f'<title>{escape(model.name)} ({plane} plane)</title>']
    for i, f in zip(idx, frames):
        shade = 0.2 + 0.6 * (i / max(1, len(recs) - 1))
        color = f"rgb({int(255 * (1 - shade))},{int(80 * shade)},{int(255 * shade)})"
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, f))
        out.append(f'<g class="frame" data-t="{recs[i].t:.6g}">'
                   f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/></g>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def moving_target_report(traj: Trajectory, target0, twist: Sequence[float]) -> dict:
    """Numbers describing how a moving-target run behaved."""
    tw = np.asarray(twist, dtype=float)
    errs = traj.errors
    drift = np.array([np.linalg.norm(tw[:3]) * r.t + np.linalg.norm(tw[3:]) * r.t for r in traj.records])
    finite = bool(np.all(np.isfinite(traj.qs)) and np.all(np.isfinite(errs)))
    return {"finite": finite, "peak_error": float(errs.max()) if errs.size else 0.0,
            "initial_error": float(errs[0]) if errs.size else 0.0,
            "max_excess": float(np.max(errs - errs[0] - drift)) if errs.size else 0.0,
            "damped_steps": int(sum(r.damped for r in traj.records)),
            "max_rate": float(np.max(np.abs([r.qdot for r in traj.records]))) if errs.size else 0.0,
            "t_end": float(traj.records[-1].t) if traj.records else 0.0}
