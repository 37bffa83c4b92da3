"""Forward kinematics, end-effector velocity/acceleration and Jacobians.

Numeric routines run on a compiled encoding of the chain (see
:func:`compile_ets`) through :mod:`armsolver.kernels`.  Symbolic routines
multiply the elementary transform matrices in order and simplify each entry
of the final product.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .ets import ETS, ElementaryTransform
from .symexpr import (
    ONE, ZERO, Expr, Sym, cos, diff, diff_time, evaluate, parse_expr, simplify,
    sin, to_text,
)

WORLD = "world"
END_EFFECTOR = "end-effector"
_FRAME_ALIASES = {"world": WORLD, "end-effector": END_EFFECTOR, "ee": END_EFFECTOR,
                  "end_effector": END_EFFECTOR, "base": WORLD}


def normalize_frame(frame: str) -> str:
    try:
        return _FRAME_ALIASES[frame.lower()]
    except KeyError:
        raise ValueError(f"unknown frame {frame!r} (use 'world' or 'end-effector')") from None


@dataclass(frozen=True)
class CompiledChain:
    codes: np.ndarray
    jidx: np.ndarray
    sign: np.ndarray
    vals: np.ndarray
    n: int

    def fk(self, q) -> np.ndarray:
        return kernels.fk(self.codes, self.jidx, self.sign, self.vals, self._q(q))

    def fk_jacobian(self, q) -> tuple[np.ndarray, np.ndarray]:
        return kernels.fk_jacobian(self.codes, self.jidx, self.sign, self.vals, self._q(q), self.n)

    def _q(self, q) -> np.ndarray:
        q = np.ascontiguousarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.n:
            raise ValueError(f"expected {self.n} joint values, got {q.shape[0]}")
        return q


def compile_ets(ets: ETS, constants: Mapping[str, float] | None = None) -> CompiledChain:
    constants = constants or {}
    missing = ets.constant_symbols() - set(constants)
    if missing:
        raise KeyError(f"unbound constant(s): {', '.join(sorted(missing))}")
    codes, jidx, sign, vals = [], [], [], []
    for et in ets:
        codes.append("xyz".index(et.axis) + (0 if et.rotation else 3))
        if et.is_joint:
            jidx.append(et.joint)
            sign.append(-1.0 if et.flip else 1.0)
            vals.append(0.0)
        else:
            jidx.append(-1)
            sign.append(1.0)
            vals.append(evaluate(et.value, constants))
    return CompiledChain(
        np.asarray(codes, dtype=np.int32), np.asarray(jidx, dtype=np.int32),
        np.asarray(sign, dtype=float), np.asarray(vals, dtype=float), ets.n)


# ---------------------------------------------------------------------------
# numeric


def fk_numeric(ets: ETS, q, constants: Mapping[str, float] | None = None) -> np.ndarray:
    return compile_ets(ets, constants).fk(q)


def jacobian(ets: ETS, q, constants: Mapping[str, float] | None = None,
             frame: str = WORLD) -> np.ndarray:
    """Geometric 6xn Jacobian; rows 0-2 linear, 3-5 angular."""
    T, J = compile_ets(ets, constants).fk_jacobian(q)
    return to_frame(J, T, frame)


def to_frame(J: np.ndarray, T: np.ndarray, frame: str) -> np.ndarray:
    if normalize_frame(frame) == WORLD:
        return J
    Rt = T[:3, :3].T
    return np.vstack([Rt @ J[:3], Rt @ J[3:]])


def joint_origins(ets: ETS, q, constants: Mapping[str, float] | None = None) -> np.ndarray:
    """Frame origins after every elementary transform, base first ((m+1) x 3)."""
    chain = compile_ets(ets, constants)
    q = chain._q(q)
    pts = [np.zeros(3)]
    for k in range(len(chain.codes)):
        sub = kernels.fk(chain.codes[:k + 1], chain.jidx[:k + 1], chain.sign[:k + 1],
                         chain.vals[:k + 1], q)
        pts.append(sub[:3, 3])
    return np.array(pts)


# ---------------------------------------------------------------------------
# symbolic


@dataclass(frozen=True)
class SymPose:
    matrix: tuple[tuple[Expr, ...], ...]

    def __getitem__(self, ij) -> Expr:
        i, j = ij
        return self.matrix[i][j]

    def texts(self, shorthand: bool = False) -> list[list[str]]:
        return [[to_text(e, shorthand) for e in row] for row in self.matrix]

    def evaluate(self, bindings: Mapping) -> np.ndarray:
        return np.array([[evaluate(e, bindings) for e in row] for row in self.matrix])

    @property
    def position(self) -> tuple[Expr, Expr, Expr]:
        return tuple(self.matrix[i][3] for i in range(3))

    @classmethod
    def from_texts(cls, rows: Sequence[Sequence[str]]) -> "SymPose":
        return cls(tuple(tuple(parse_expr(t) for t in row) for row in rows))


@dataclass(frozen=True)
class SymVec3:
    x: Expr
    y: Expr
    z: Expr

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def texts(self, shorthand: bool = False) -> list[str]:
        return [to_text(e, shorthand) for e in self]

    def evaluate(self, bindings: Mapping) -> np.ndarray:
        return np.array([evaluate(e, bindings) for e in self])


def _identity() -> list[list[Expr]]:
    return [[ONE if i == j else ZERO for j in range(4)] for i in range(4)]


def joint_symbol(et: ElementaryTransform) -> Sym:
    return Sym(et.joint_symbol)


def et_matrix(et: ElementaryTransform, value=None):
    """Homogeneous matrix of one transform.

    Numeric (4x4 ndarray) when ``value`` is a real number or the transform is
    constant with a numeric argument; symbolic (4x4 nested lists of Expr)
    when ``value`` is an :class:`Expr`.  For joint transforms the argument
    is ``value`` (negated when the joint is flipped); for constant ones it is
    the stored constant and ``value`` must be omitted.
    """
    if et.is_joint:
        if value is None:
            raise ValueError("joint transform needs a value")
        arg = value
        if et.flip:
            arg = -arg
    else:
        if value is not None:
            raise ValueError("constant transform takes no value")
        arg = et.value
    symbolic = isinstance(arg, Expr)
    if not symbolic:
        arg = float(arg)
    k = "xyz".index(et.axis)
    if symbolic:
        M = _identity()
        if et.rotation:
            c, s = cos(arg), sin(arg)
            a, b = [(1, 2), (2, 0), (0, 1)][k]
            M[a][a] = c
            M[a][b] = -s
            M[b][a] = s
            M[b][b] = c
        else:
            M[k][3] = arg
        return M
    M = np.eye(4)
    if et.rotation:
        c, s = np.cos(arg), np.sin(arg)
        a, b = [(1, 2), (2, 0), (0, 1)][k]
        M[a, a] = c
        M[a, b] = -s
        M[b, a] = s
        M[b, b] = c
    else:
        M[k, 3] = arg
    return M


def _matmul(A, B):
    return [[sum((A[i][k] * B[k][j] for k in range(4)), ZERO) for j in range(4)] for i in range(4)]


def _product(ets: ETS, upto: int | None = None):
    M = _identity()
    for et in list(ets)[:upto]:
        arg = joint_symbol(et) if et.is_joint else None
        M = _matmul(M, et_matrix(et, arg))
    return M


def fk_symbolic(ets: ETS) -> SymPose:
    M = _product(ets)
    return SymPose(tuple(tuple(simplify(e) for e in row) for row in M))


def ee_velocity_symbolic(ets: ETS) -> SymVec3:
    pose = fk_symbolic(ets)
    return SymVec3(*(diff_time(e) for e in pose.position))


def ee_acceleration_symbolic(ets: ETS) -> SymVec3:
    vel = ee_velocity_symbolic(ets)
    return SymVec3(*(diff_time(e) for e in vel))


def jacobian_symbolic(ets: ETS) -> list[list[Expr]]:
    """6xn symbolic world-frame Jacobian: position partials over joint axes."""
    pose = fk_symbolic(ets)
    cols = []
    M = _identity()
    for et in ets:
        if et.is_joint:
            k = "xyz".index(et.axis)
            axis = [simplify(M[r][k]) for r in range(3)]
            if et.flip:
                axis = [-a for a in axis]
            lin = [simplify(diff(p, joint_symbol(et))) for p in pose.position]
            cols.append(lin + (axis if et.rotation else [ZERO, ZERO, ZERO]))
        arg = joint_symbol(et) if et.is_joint else None
        M = _matmul(M, et_matrix(et, arg))
    return [[cols[j][r] for j in range(len(cols))] for r in range(6)]


def symbol_bindings(ets: ETS, q=None, qd=None, qdd=None,
                    constants: Mapping[str, float] | None = None) -> dict[str, float]:
    """Map joint symbol labels (``theta1``, ``theta1_dot``, ...) to values."""
    env = dict(constants or {})
    for vec, suffix in ((q, ""), (qd, "_dot"), (qdd, "_ddot")):
        if vec is None:
            continue
        for et, v in zip(ets.joints, vec):
            env[et.joint_symbol + suffix] = float(v)
    return env
