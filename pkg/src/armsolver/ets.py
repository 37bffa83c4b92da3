"""Elementary transform sequences, their text form, and the robot registry."""
from __future__ import annotations

import random
import re
import threading
import uuid
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .symexpr import (
    JOINT_ANGLE, JOINT_DISPLACEMENT, Expr, ExprSyntaxError, evaluate,
    free_symbols, parse_expr, to_text,
)

__all__ = [
    "ElementaryTransform", "ETS", "RobotModel", "RobotRegistry",
    "EtsSyntaxError", "InvalidRobotIdError", "UnknownModelError",
    "parse_ets", "format_ets", "builtin_model", "BUILTIN_ETS",
    "REVOLUTE", "PRISMATIC",
]

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

AXES = "xyz"


class EtsSyntaxError(ValueError):
    """Malformed ETS text; ``position`` is the 0-based token index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


class InvalidRobotIdError(LookupError):
    def __init__(self, robot_id: str):
        super().__init__(robot_id)
        self.robot_id = robot_id

    def __str__(self) -> str:
        return "Invalid robot ID"


class UnknownModelError(ValueError):
    pass


@dataclass(frozen=True)
class ElementaryTransform:
    """One rotation about, or translation along, a local axis.

    A transform either carries a joint (``joint`` is its 0-based index) or a
    constant argument ``value``.  ``label`` keeps the joint's source spelling
    (``q1``, ``theta2``, ``d3``) for printing and symbol naming only.
    """

    axis: str
    rotation: bool
    joint: int | None = None
    flip: bool = False
    value: Expr | None = None
    label: str | None = field(default=None, compare=False)

    @property
    def is_joint(self) -> bool:
        return self.joint is not None

    @property
    def name(self) -> str:
        return ("R" if self.rotation else "t") + self.axis

    @property
    def joint_symbol(self) -> str:
        """Symbol name used for this joint in symbolic results."""
        if self.label:
            m = re.match(r"(q|theta|d)(\d+)$", self.label)
            if m:
                return ("d" if m.group(1) == "d" else "theta") + m.group(2)
        return ("theta" if self.rotation else "d") + str(self.joint + 1)

    def __str__(self) -> str:
        if self.is_joint:
            label = self.label or ("q" if self.rotation else "d") + str(self.joint + 1)
            arg = ("-" if self.flip else "") + label
        else:
            arg = to_text(self.value)
        return f"{self.name}({arg})"


@dataclass(frozen=True)
class ETS:
    transforms: tuple[ElementaryTransform, ...]

    def __post_init__(self):
        idx = [et.joint for et in self.transforms if et.is_joint]
        if idx != list(range(len(idx))):
            raise ValueError("joint indices must be 0..n-1 in order of appearance")

    def __len__(self) -> int:
        return len(self.transforms)

    def __iter__(self):
        return iter(self.transforms)

    @property
    def n(self) -> int:
        return sum(1 for et in self.transforms if et.is_joint)

    @property
    def joints(self) -> list[ElementaryTransform]:
        return [et for et in self.transforms if et.is_joint]

    @property
    def joint_kinds(self) -> list[str]:
        return [REVOLUTE if et.rotation else PRISMATIC for et in self.joints]

    def constant_symbols(self) -> set[str]:
        names: set[str] = set()
        for et in self.transforms:
            if et.value is not None:
                names |= {s.label for s in free_symbols(et.value)}
        return names

    def same_structure(self, other: "ETS") -> bool:
        """Equality ignoring joint spellings."""
        return self.transforms == other.transforms

    def __str__(self) -> str:
        return format_ets(self)


_ET_RE = re.compile(r"(R|t)([xyz])\((.*)\)$")
_JOINT_RE = re.compile(r"(-?)\s*(q|theta|d)(\d+)$")


def _split_tokens(text: str) -> list[str]:
    """Whitespace-separated tokens, allowing spaces inside parentheses."""
    tokens, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                tokens.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        tokens.append("".join(cur))
    return tokens


def parse_ets(text: str) -> ETS:
    """Parse ``"Rz(q1) tx(L1) Ry(-q2) ..."`` into an :class:`ETS`.

    Joint variables (``q``/``theta`` revolute, ``d`` prismatic) are renumbered
    0..n-1 by first appearance; a leading ``-`` marks a flipped joint.
    Anything else inside the parentheses is a constant expression.
    """
    tokens = _split_tokens(text)
    if not tokens:
        raise EtsSyntaxError("empty transform sequence", 0)
    seen: set[tuple[str, int]] = set()
    out = []
    for pos, tok in enumerate(tokens):
        m = _ET_RE.match(tok)
        if not m:
            raise EtsSyntaxError(f"malformed elementary transform {tok!r}", pos)
        rotation = m.group(1) == "R"
        axis = m.group(2)
        arg = m.group(3).strip()
        if not arg:
            raise EtsSyntaxError(f"missing argument in {tok!r}", pos)
        jm = _JOINT_RE.match(arg)
        if jm:
            var, digits = jm.group(2), int(jm.group(3))
            prismatic_var = var == "d"
            if rotation and prismatic_var:
                raise EtsSyntaxError(f"rotation {tok!r} uses prismatic variable", pos)
            if not rotation and not prismatic_var:
                raise EtsSyntaxError(f"translation {tok!r} uses revolute variable", pos)
            key = (var == "d", digits)
            if key in seen:
                raise EtsSyntaxError(f"duplicate joint variable {var}{digits}", pos)
            seen.add(key)
            out.append(ElementaryTransform(
                axis, rotation, joint=len(seen) - 1, flip=bool(jm.group(1)),
                label=f"{var}{digits}"))
            continue
        try:
            value = parse_expr(arg)
        except ExprSyntaxError as exc:
            raise EtsSyntaxError(f"bad constant in {tok!r}: {exc}", pos) from None
        if any(s.kind in (JOINT_ANGLE, JOINT_DISPLACEMENT) for s in free_symbols(value)):
            raise EtsSyntaxError(f"joint variable inside constant {tok!r}", pos)
        out.append(ElementaryTransform(axis, rotation, value=value))
    return ETS(tuple(out))


def format_ets(ets: ETS) -> str:
    return " ".join(str(et) for et in ets)


# ---------------------------------------------------------------------------
# robot models


@dataclass(frozen=True)
class RobotModel:
    id: str
    name: str
    ets: ETS
    constants: Mapping[str, float] = field(default_factory=dict)
    configurations: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    builtin: bool = False

    @property
    def n(self) -> int:
        return self.ets.n

    @property
    def joint_kinds(self) -> list[str]:
        return self.ets.joint_kinds

    def config(self, q) -> np.ndarray:
        """Resolve a named configuration (``"qz"``, ``"qr"``) or a vector."""
        if isinstance(q, str):
            if q not in self.configurations:
                raise KeyError(f"robot {self.name!r} has no configuration {q!r}")
            q = self.configurations[q]
        arr = np.asarray(q, dtype=float).reshape(-1)
        if arr.shape[0] != self.n:
            raise ValueError(f"expected {self.n} joint values, got {arr.shape[0]}")
        return arr

    def compiled(self):
        from .kinematics import compile_ets
        return compile_ets(self.ets, self.constants)


BUILTIN_ETS = {
    "panda": (
        "tz(0.333) Rz(q1) Ry(q2) tz(0.316) Rz(q3) tx(0.0825) Ry(-q4) tx(-0.0825) "
        "tz(0.384) Rz(q5) Ry(-q6) tx(0.088) Rx(pi) tz(0.107) Rz(q7)"
    ),
    "ur3": (
        "tz(0.1519) Rz(q1) ty(0.1198) Ry(q2) ty(-0.0925) tz(0.2437) Ry(q3) "
        "tz(0.2132) Ry(q4) ty(0.08505) Rz(q5) tz(0.08535) Ry(q6) ty(0.0819)"
    ),
}

# Ready poses are conventional values, not reference data.
_READY = {
    "panda": (0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.79),
    "ur3": (0.0, -0.5, -1.5, 0.5, 1.0, 0.0),
}

_NOT_AVAILABLE = {"lbr", "frankie"}


def _new_builtin(name: str, robot_id: str) -> RobotModel:
    key = name.strip().lower()
    if key in _NOT_AVAILABLE:
        raise UnknownModelError(
            f"model {name!r} is not available: its kinematic parameters are not "
            f"defined in this package (known: {', '.join(sorted(BUILTIN_ETS))})")
    if key not in BUILTIN_ETS:
        raise UnknownModelError(f"unknown model {name!r} (known: {', '.join(sorted(BUILTIN_ETS))})")
    ets = parse_ets(BUILTIN_ETS[key])
    return RobotModel(
        id=robot_id, name=key, ets=ets,
        configurations={"qz": (0.0,) * ets.n, "qr": _READY[key]},
        builtin=True)


class RobotRegistry:
    """Robots addressable by opaque UUID-format ids.

    With a ``seed`` the ids are reproducible; without one they come from
    :func:`uuid.uuid4`.  Reads are lock-free, registrations are serialized.
    """

    def __init__(self, seed: int | None = None):
        self._models: dict[str, RobotModel] = {}
        self._lock = threading.Lock()
        self._rng = random.Random(seed) if seed is not None else None

    def _fresh_id(self) -> str:
        if self._rng is None:
            return str(uuid.uuid4())
        return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))

    def register(self, name: str, ets: ETS, constants: Mapping[str, float] | None = None,
                 configurations: Mapping[str, Sequence[float]] | None = None) -> str:
        with self._lock:
            robot_id = self._fresh_id()
            configs = {"qz": (0.0,) * ets.n}
            for k, v in (configurations or {}).items():
                configs[k] = tuple(float(x) for x in v)
            self._models[robot_id] = RobotModel(
                id=robot_id, name=name, ets=ets,
                constants=dict(constants or {}), configurations=configs)
            return robot_id

    def register_builtin(self, name: str) -> str:
        with self._lock:
            robot_id = self._fresh_id()
            self._models[robot_id] = _new_builtin(name, robot_id)
            return robot_id

    def get(self, robot_id) -> RobotModel:
        try:
            return self._models[robot_id]
        except (KeyError, TypeError):
            raise InvalidRobotIdError(str(robot_id)) from None

    def __contains__(self, robot_id) -> bool:
        return robot_id in self._models

    def __len__(self) -> int:
        return len(self._models)

    def ids(self) -> list[str]:
        return list(self._models)


def builtin_model(name: str, registry: RobotRegistry | None = None) -> RobotModel:
    """A fresh built-in model (``"panda"`` or ``"ur3"``), registered when a registry is given."""
    if registry is not None:
        return registry.get(registry.register_builtin(name))
    return _new_builtin(name, str(uuid.uuid4()))


def constants_env(ets: ETS, constants: Mapping[str, float]) -> dict[str, float]:
    missing = ets.constant_symbols() - set(constants)
    if missing:
        raise KeyError(f"unbound constant(s): {', '.join(sorted(missing))}")
    return dict(constants)


def eval_constant(value: Expr, constants: Mapping[str, float]) -> float:
    return evaluate(value, constants)
