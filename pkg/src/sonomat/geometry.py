"""Planar frames, rigid transforms and angle arithmetic shared by every module.

World frame == mat frame: origin at the mat corner, x right, y up (meters),
z height above the mat surface. Angles are radians in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap `a` into (-pi, pi]; ties at -pi map to +pi.

    The result is congruent to `a` modulo 2*pi.
    """
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.remainder(a, TWO_PI)  # lands in [-pi, pi]
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose in the mat frame; theta is wrapped on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose position must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Point3D:
    """Point in the world frame; z is height above the mat surface."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("point components must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Transform2D:
    """Rigid planar transform: rotate by `rotation`, then translate."""

    tx: float
    ty: float
    rotation: float

    def __post_init__(self):
        if not (math.isfinite(self.tx) and math.isfinite(self.ty)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "rotation", wrap_angle(self.rotation))

    @classmethod
    def identity(cls) -> "Transform2D":
        return cls(0.0, 0.0, 0.0)

    def apply_point(self, x: float, y: float) -> tuple[float, float]:
        c = math.cos(self.rotation)
        s = math.sin(self.rotation)
        return (c * x - s * y + self.tx, s * x + c * y + self.ty)

    def compose(self, other: "Transform2D") -> "Transform2D":
        """self after other: (self o other)(p) = self(other(p))."""
        x, y = self.apply_point(other.tx, other.ty)
        return Transform2D(x, y, wrap_angle(self.rotation + other.rotation))

    def inverse(self) -> "Transform2D":
        c = math.cos(self.rotation)
        s = math.sin(self.rotation)
        return Transform2D(-(c * self.tx + s * self.ty), -(-s * self.tx + c * self.ty), -self.rotation)


def apply_transform(t: Transform2D, p: Pose2D) -> Pose2D:
    """Apply a rigid transform to a pose: rotate then translate the position,
    add the rotation to the heading (wrapped)."""
    x, y = t.apply_point(p.x, p.y)
    return Pose2D(x, y, wrap_angle(p.theta + t.rotation))


def pose_to_transform(p: Pose2D) -> Transform2D:
    """Transform taking platform/body-frame coordinates to world coordinates."""
    return Transform2D(p.x, p.y, p.theta)
