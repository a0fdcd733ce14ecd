"""Poses and quaternion math for the containment frame chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_NORM_TOL = 1e-9


def _normalized(q: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(q))
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError("quaternion must be non-zero and finite")
    if abs(norm - 1.0) < 1e-12:
        return q  # idempotent for already-normalized input (bit-exact replay)
    return q / norm


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, (w, x, y, z) convention."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    qv = np.array([0.0, v[0], v[1], v[2]])
    out = quat_multiply(quat_multiply(q, qv), quat_conjugate(q))
    return out[1:]


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


@dataclass(frozen=True)
class Pose:
    """Position in meters plus a unit quaternion (w, x, y, z).

    The quaternion is re-normalized on construction; position components
    must be finite.
    """

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError("position must be a finite 3-vector")
        quat = _normalized(np.asarray(self.orientation, dtype=float))
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_values(cls, xyz: Sequence[float], wxyz: Sequence[float] = (1, 0, 0, 0)) -> "Pose":
        return cls(np.asarray(xyz, dtype=float), np.asarray(wxyz, dtype=float))

    def compose(self, child: "Pose") -> "Pose":
        """This pose (parent frame) applied to a child pose."""
        position = self.position + quat_rotate(self.orientation, child.position)
        orientation = quat_multiply(self.orientation, child.orientation)
        return Pose(position, orientation)

    def inverse(self) -> "Pose":
        inv_q = quat_conjugate(self.orientation)
        return Pose(-quat_rotate(inv_q, self.position), inv_q)

    def relative_to(self, parent: "Pose") -> "Pose":
        """The pose of self expressed in ``parent``'s frame."""
        return parent.inverse().compose(self)

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.orientation)
        m[:3, 3] = self.position
        return m

    def approx_equal(self, other: "Pose", tol: float = _NORM_TOL) -> bool:
        if np.max(np.abs(self.position - other.position)) > tol:
            return False
        # sign-normalized quaternion dot product
        return abs(float(np.dot(self.orientation, other.orientation))) >= 1.0 - tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.position, other.position)
                    and np.array_equal(self.orientation, other.orientation))
