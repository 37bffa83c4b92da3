"""Numerical inverse kinematics over the pose-error twist.

Five update rules share one loop: Newton-Raphson, Gauss-Newton and three
Levenberg-Marquardt damping schedules (Chan, Sugihara, Wampler).  A descent
that stalls or hits its iteration cap restarts from a seeded random
configuration.  The LM variants never accept an uphill step: the step is
halved until E does not increase, and the descent is abandoned when no
fraction helps.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ets import PRISMATIC, RobotModel
from .spatial import check_pose, orthonormalize, rot_log

METHODS = ("newton-raphson", "gauss-newton", "lm-chan", "lm-sugihara", "lm-wampler")
_LM = ("lm-chan", "lm-sugihara", "lm-wampler")

SUGIHARA_EPS = 1e-3
STALL_STEP = 1e-12
STALL_ITERS = 30
STALL_GAIN = 1e-3  # relative cost decrease that counts as progress
BACKTRACK = 12  # halvings tried before an uphill LM step abandons the descent
PRISMATIC_RANGE = (-1.0, 1.0)


class IKError(ValueError):
    pass


@dataclass(frozen=True)
class Twist:
    v: np.ndarray
    w: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.w])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass
class IKOptions:
    method: str = "lm-chan"
    max_iterations: int = 100
    tolerance: float = 1e-10
    restarts: int = 30
    seed: int = 0
    lm_lambda: float | None = None
    weight: tuple[float, ...] = (1.0,) * 6

    def __post_init__(self):
        if self.method not in METHODS:
            raise IKError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.max_iterations < 1 or self.restarts < 0:
            raise IKError("iteration and restart counts must be positive")
        if self.tolerance < 0:
            raise IKError("tolerance must be non-negative")
        if len(self.weight) != 6:
            raise IKError("weight must have 6 entries")

    @property
    def damping(self) -> float:
        if self.lm_lambda is not None:
            return self.lm_lambda
        return 1e-4 if self.method == "lm-wampler" else 1.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["weight"] = list(self.weight)
        return d


@dataclass
class IKResult:
    q: np.ndarray
    success: bool
    iterations: int
    restarts: int
    residual: float
    history: list[list[float]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "q": [float(x) for x in self.q],
            "success": bool(self.success),
            "iterations": int(self.iterations),
            "restarts": int(self.restarts),
            "residual": float(self.residual),
        }


def pose_error(current, desired) -> Twist:
    """World-frame error twist taking ``current`` to ``desired``."""
    current = np.asarray(current, dtype=float)
    desired = np.asarray(desired, dtype=float)
    v = desired[:3, 3] - current[:3, 3]
    w = rot_log(desired[:3, :3] @ current[:3, :3].T)
    return Twist(v, w)


def _error_vec(T, Td) -> np.ndarray:
    e = np.empty(6)
    e[:3] = Td[:3, 3] - T[:3, 3]
    e[3:] = rot_log(Td[:3, :3] @ T[:3, :3].T)
    return e


def random_config(model: RobotModel, rng: np.random.Generator) -> np.ndarray:
    lo = np.where(np.array(model.joint_kinds) == PRISMATIC, PRISMATIC_RANGE[0], -math.pi)
    hi = np.where(np.array(model.joint_kinds) == PRISMATIC, PRISMATIC_RANGE[1], math.pi)
    return rng.uniform(lo, hi)


def _step(method: str, J, We, e, E, lam) -> np.ndarray:
    g = J.T @ (We * e)
    if method == "newton-raphson":
        return np.linalg.pinv(J) @ (We * e)
    A = J.T @ (We[:, None] * J)
    if method == "gauss-newton":
        return np.linalg.pinv(A) @ g
    n = A.shape[0]
    if method == "lm-chan":
        Wn = lam * E * np.eye(n)
    elif method == "lm-sugihara":
        Wn = E * np.eye(n) + SUGIHARA_EPS * np.eye(n)
    else:
        Wn = lam * np.eye(n)
    try:
        return np.linalg.solve(A + Wn, g)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(A + Wn) @ g


def ik_solve(model: RobotModel, target, q0=None, opts: IKOptions | None = None,
             orthonormalize_target: bool = False) -> IKResult:
    """Solve ``fk(q) = target``.

    ``q0`` seeds the first descent (zeros when absent); every restart draws
    a fresh configuration from ``numpy.random.default_rng(opts.seed)``.
    Restart ``k`` succeeds first -> the reported result is from restart ``k``.
    """
    opts = opts or IKOptions()
    target = np.asarray(target, dtype=float)
    if target.shape != (4, 4):
        raise IKError("target must be a 4x4 matrix")
    if orthonormalize_target:
        target = orthonormalize(target)
    check_pose(target, "target")
    chain = model.compiled()
    n = chain.n
    if q0 is None:
        q = np.zeros(n)
    else:
        q = np.asarray(q0, dtype=float).reshape(-1)
        if q.shape[0] != n:
            raise IKError(f"q0 has {q.shape[0]} entries, robot has {n} joints")
    We = np.asarray(opts.weight, dtype=float)
    lam = opts.damping
    rng = np.random.default_rng(opts.seed)
    lm = opts.method in _LM

    best_q, best_E = q.copy(), math.inf
    total_iters = 0
    history: list[list[float]] = []
    for attempt in range(opts.restarts + 1):
        if attempt > 0:
            q = random_config(model, rng)
        T, J = chain.fk_jacobian(q)
        e = _error_vec(T, target)
        E = 0.5 * float(e @ (We * e))
        run = [E]
        history.append(run)
        last_gain_iter = 0
        ref_E = E
        for it in range(opts.max_iterations):
            if E < best_E:
                best_E, best_q = E, q.copy()
            if E <= opts.tolerance:
                return IKResult(q, True, total_iters, attempt, E, history)
            total_iters += 1
            dq = _step(opts.method, J, We, e, E, lam)
            if not np.all(np.isfinite(dq)) or np.max(np.abs(dq)) < STALL_STEP:
                break
            for _ in range(BACKTRACK + 1 if lm else 1):
                q_new = q + dq
                T_new, J_new = chain.fk_jacobian(q_new)
                e_new = _error_vec(T_new, target)
                E_new = 0.5 * float(e_new @ (We * e_new))
                if not lm or E_new <= E:
                    break
                dq = 0.5 * dq
            if lm and E_new > E:
                # no downhill fraction of the step: abandon this descent
                break
            q, T, J, e, E = q_new, T_new, J_new, e_new, E_new
            run.append(E)
            if E < ref_E * (1.0 - STALL_GAIN):
                ref_E = E
                last_gain_iter = it
            elif it - last_gain_iter >= STALL_ITERS:
                break
        if E < best_E:
            best_E, best_q = E, q.copy()
        if E <= opts.tolerance:
            return IKResult(q, True, total_iters, attempt, E, history)
    return IKResult(best_q, False, total_iters, opts.restarts, best_E, history)
