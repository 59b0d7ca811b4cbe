"""Rigid-body geometry: conformations, Euler rotations, poses and centering.

Conventions
-----------
Bodies are defined by 3xN conformation matrices, one landmark per column,
nominally expressed relative to the body's geometric center.  A pose maps a
conformation into the common frame via ``S = Q @ C + t @ 1^T`` where ``Q`` is
a proper rotation composed from yaw/pitch/roll angles as
``Q = Qz(gamma) @ Qy(beta) @ Qx(alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigurationError, InvalidArgumentError

ROTATION_TOL = 1e-12
GIMBAL_LOCK_TOL = 1e-9

__all__ = [
    "EulerAngles",
    "RotationMatrix",
    "Conformation",
    "Pose",
    "SensorMatrix",
    "rotation_from_euler",
    "euler_from_rotation",
    "apply_pose",
    "stack_scenario",
    "schonberg_dcm",
    "geometric_center",
    "recenter",
]


def _canonical_angle(x: float) -> float:
    # maps to (-pi, pi]; note -pi wraps to +pi
    return math.pi - (math.pi - x) % (2.0 * math.pi)


def _require_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} must be finite")


@dataclass(frozen=True)
class EulerAngles:
    """Roll/pitch/yaw triple in radians, normalized to (-pi, pi]."""

    alpha: float  # roll, about x
    beta: float  # pitch, about y
    gamma: float  # yaw, about z

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidArgumentError(f"angle {name} must be finite")
            object.__setattr__(self, name, _canonical_angle(v))

    @classmethod
    def from_degrees(cls, alpha: float, beta: float, gamma: float) -> "EulerAngles":
        return cls(math.radians(alpha), math.radians(beta), math.radians(gamma))

    def as_degrees(self) -> tuple[float, float, float]:
        return (math.degrees(self.alpha), math.degrees(self.beta), math.degrees(self.gamma))


@dataclass(frozen=True)
class RotationMatrix:
    """Proper rotation: orthonormal 3x3 with determinant +1."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (3, 3):
            raise InvalidArgumentError(f"rotation matrix must be 3x3, got {q.shape}")
        _require_finite(q, "rotation matrix")
        if np.linalg.norm(q.T @ q - np.eye(3)) > ROTATION_TOL:
            raise InvalidArgumentError("matrix is not orthonormal")
        if abs(np.linalg.det(q) - 1.0) > ROTATION_TOL:
            raise InvalidArgumentError("matrix is not a proper rotation (det != +1)")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class Conformation:
    """3xN landmark matrix defining a body's shape; N >= 4, non-degenerate."""

    c: np.ndarray
    n_points: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != 3:
            raise InvalidArgumentError(f"conformation must be 3xN, got {c.shape}")
        n = c.shape[1]
        if n < 4:
            raise InvalidArgumentError(f"conformation needs at least 4 landmarks, got {n}")
        _require_finite(c, "conformation")
        gram = c.T @ c
        d2 = np.diag(gram)[:, None] + np.diag(gram)[None, :] - 2.0 * gram
        np.fill_diagonal(d2, np.inf)
        if np.min(d2) <= 0.0:
            raise InvalidArgumentError("conformation has duplicate landmarks")
        centered = c - c.mean(axis=1, keepdims=True)
        s = np.linalg.svd(centered, compute_uv=False)
        if s[2] <= 1e-9 * s[0]:
            raise InvalidArgumentError("conformation is degenerate (centered rank < 3)")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "n_points", n)


@dataclass(frozen=True)
class Pose:
    """Rotation plus translation of a body relative to the canonical frame."""

    rotation: RotationMatrix
    translation: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        if t.shape != (3,):
            raise InvalidArgumentError(f"translation must be a 3-vector, got shape {t.shape}")
        _require_finite(t, "translation")
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(RotationMatrix(np.eye(3)), np.zeros(3))


@dataclass(frozen=True)
class SensorMatrix:
    """3xN matrix of landmark positions in the common frame."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != 3:
            raise InvalidArgumentError(f"sensor matrix must be 3xN, got {s.shape}")
        _require_finite(s, "sensor matrix")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def n_points(self) -> int:
        return self.s.shape[1]


def rotation_from_euler(angles: EulerAngles) -> RotationMatrix:
    """Compose the rotation ``Qz(gamma) @ Qy(beta) @ Qx(alpha)``.

    Parameters
    ----------
    angles : EulerAngles
        Roll (x), pitch (y) and yaw (z) in radians.

    Returns
    -------
    RotationMatrix
    """
    ca, sa = math.cos(angles.alpha), math.sin(angles.alpha)
    cb, sb = math.cos(angles.beta), math.sin(angles.beta)
    cg, sg = math.cos(angles.gamma), math.sin(angles.gamma)
    qz = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    qy = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    qx = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    return RotationMatrix(qz @ qy @ qx)


def euler_from_rotation(q: RotationMatrix) -> EulerAngles:
    """Invert :func:`rotation_from_euler` away from the pitch singularity.

    Raises
    ------
    DegenerateConfigurationError
        If ``|q[2, 0]| >= 1 - 1e-9`` (pitch at +/-90 degrees; roll and yaw
        are then not separable).
    """
    m = q.q
    if abs(m[2, 0]) >= 1.0 - GIMBAL_LOCK_TOL:
        raise DegenerateConfigurationError("gimbal lock: |q_31| ~ 1, Euler angles not unique")
    beta = math.asin(-float(np.clip(m[2, 0], -1.0, 1.0)))
    alpha = math.atan2(m[2, 1], m[2, 2])
    gamma = math.atan2(m[1, 0], m[0, 0])
    return EulerAngles(alpha, beta, gamma)


def apply_pose(c: Conformation, pose: Pose) -> SensorMatrix:
    """Place a conformation in the common frame: ``S = Q @ C + t @ 1^T``."""
    return SensorMatrix(pose.rotation.q @ c.c + pose.translation[:, None])


def stack_scenario(c1: Conformation, c2: Conformation, pose2: Pose) -> SensorMatrix:
    """Stack the two-body scenario ``[S1 | S2]`` with body 1 at canonical pose."""
    s2 = apply_pose(c2, pose2)
    return SensorMatrix(np.hstack([c1.c, s2.s]))


def schonberg_dcm(n: int) -> np.ndarray:
    """Double-centering matrix ``J = I - (1/n) 11^T`` (symmetric, idempotent)."""
    if n < 1:
        raise InvalidArgumentError(f"schonberg_dcm needs n >= 1, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def geometric_center(s: SensorMatrix | Conformation | np.ndarray) -> np.ndarray:
    """Mean of the columns (the body's geometric center)."""
    m = _as_3xn(s)
    if m.shape[1] < 1:
        raise InvalidArgumentError("geometric center of an empty point set")
    return m.mean(axis=1)


def recenter(c: Conformation) -> Conformation:
    """Shift a conformation so its geometric center is the origin."""
    return Conformation(c.c - c.c.mean(axis=1, keepdims=True))


def _as_3xn(x) -> np.ndarray:
    if isinstance(x, SensorMatrix):
        return x.s
    if isinstance(x, Conformation):
        return x.c
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[0] != 3:
        raise InvalidArgumentError(f"expected a 3xN matrix, got shape {a.shape}")
    return a
