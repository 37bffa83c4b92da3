"""Serial-manipulator kinematics from elementary transform sequences, with a
tool-calling agent pipeline and benchmark scoring on top."""

from .ets import ETS, RobotModel, RobotRegistry, builtin_model, parse_ets
from .ik import IKOptions, IKResult, ik_solve
from .kernels import BACKEND as KERNEL_BACKEND
from .kinematics import (compile_ets, ee_acceleration_symbolic, ee_velocity_symbolic,
                         fk_numeric, fk_symbolic, jacobian, jacobian_symbolic)
from .motion import ServoOptions, quintic_joint_traj, simulate_servo

__version__ = "0.1.0"

__all__ = [
    "ETS", "RobotModel", "RobotRegistry", "builtin_model", "parse_ets",
    "IKOptions", "IKResult", "ik_solve", "KERNEL_BACKEND",
    "compile_ets", "fk_numeric", "fk_symbolic", "jacobian", "jacobian_symbolic",
    "ee_velocity_symbolic", "ee_acceleration_symbolic",
    "ServoOptions", "quintic_joint_traj", "simulate_servo",
]
