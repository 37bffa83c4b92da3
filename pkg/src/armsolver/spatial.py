"""Rigid-body helpers: skew matrices, the SO(3) log/exp maps and SE(3) checks."""
from __future__ import annotations

import math

import numpy as np

ORTHO_TOL = 1e-9


def skew(w) -> np.ndarray:
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rot_log(R) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, robust near 0 and pi."""
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    cos_t = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    theta = math.acos(cos_t)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-6:
        # sin(t)/t ~ 1 - t^2/6
        return 0.5 * w * (1.0 + theta * theta / 6.0)
    if math.pi - theta < 1e-4:
        # R + I = 2 a a^T near a half turn; pick the best-conditioned column
        B = 0.5 * (R + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / math.sqrt(max(B[k, k], 1e-300))
        if axis @ w < 0:
            axis = -axis
        return theta * axis / np.linalg.norm(axis)
    return theta / (2.0 * math.sin(theta)) * w


def rot_exp(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = skew(w)
    if theta < 1e-9:
        return np.eye(3) + K + 0.5 * K @ K
    return (np.eye(3) + math.sin(theta) / theta * K
            + (1.0 - math.cos(theta)) / theta ** 2 * K @ K)


def is_pose(T, tol: float = ORTHO_TOL) -> bool:
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4) or not np.all(np.isfinite(T)):
        return False
    if not np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0]):
        return False
    R = T[:3, :3]
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def check_pose(T, name: str = "pose") -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if not is_pose(T):
        raise ValueError(f"{name} is not a valid homogeneous transform")
    return T


def orthonormalize(T) -> np.ndarray:
    """Project a nearly-rigid 4x4 matrix onto SE(3) (polar decomposition of R)."""
    T = np.array(T, dtype=float)
    if T.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    U, _, Vt = np.linalg.svd(T[:3, :3])
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    out = np.eye(4)
    out[:3, :3] = R
    out[:3, 3] = T[:3, 3]
    return out


def transl(x=0.0, y=0.0, z=0.0) -> np.ndarray:
    T = np.eye(4)
    T[:3, 3] = (x, y, z)
    return T


def rotz(theta: float) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = rot_exp([0.0, 0.0, theta])
    return T
