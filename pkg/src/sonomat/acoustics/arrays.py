"""Phased-array geometry, focal phase solving and focus clamping.

The array is a rows x cols grid of circular-piston elements in a horizontal
plane at `mount_height` above the mat, positioned by a rigid planar transform
(the carrying platform's pose). Focusing uses the standard conjugate-delay
law: each element is driven with phase -k*d_i so all contributions arrive in
phase at the focus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sonomat.geometry import Point3D, Transform2D, TWO_PI

#: quality falls to zero once the delivered focus misses the request by this
#: distance (about a hand's breadth)
QUALITY_SCALE = 0.1


@dataclass(frozen=True)
class TransducerArray:
    rows: int = 16
    cols: int = 16
    pitch: float = 0.010
    element_radius: float = 0.0045
    frequency: float = 40_000.0
    speed_of_sound: float = 346.0
    reference_amplitude: float = 1.0
    pose: Transform2D = Transform2D(0.0, 0.0, 0.0)
    mount_height: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs rows, cols >= 1")
        if self.pitch <= 0 or self.element_radius <= 0:
            raise ValueError("pitch and element radius must be > 0")
        if self.frequency <= 0 or self.speed_of_sound <= 0:
            raise ValueError("frequency and speed of sound must be > 0")

    @property
    def wavenumber(self) -> float:
        return TWO_PI * self.frequency / self.speed_of_sound

    @property
    def wavelength(self) -> float:
        return self.speed_of_sound / self.frequency

    @property
    def element_count(self) -> int:
        return self.rows * self.cols

    @property
    def half_extent(self) -> tuple[float, float]:
        """Footprint half extent (x, y) in the array frame, elements included."""
        return (
            (self.cols - 1) * self.pitch / 2 + self.element_radius,
            (self.rows - 1) * self.pitch / 2 + self.element_radius,
        )

    def element_positions(self) -> np.ndarray:
        """(rows*cols, 3) element centers in world coordinates, row-major."""
        xs = (np.arange(self.cols) - (self.cols - 1) / 2) * self.pitch
        ys = (np.arange(self.rows) - (self.rows - 1) / 2) * self.pitch
        gx, gy = np.meshgrid(xs, ys)  # gy varies along rows
        local = np.column_stack([gx.ravel(), gy.ravel()])
        c = math.cos(self.pose.rotation)
        s = math.sin(self.pose.rotation)
        world_x = c * local[:, 0] - s * local[:, 1] + self.pose.tx
        world_y = s * local[:, 0] + c * local[:, 1] + self.pose.ty
        world_z = np.full(len(local), self.mount_height)
        return np.column_stack([world_x, world_y, world_z])

    def moved(self, pose: Transform2D) -> "TransducerArray":
        return TransducerArray(
            rows=self.rows, cols=self.cols, pitch=self.pitch,
            element_radius=self.element_radius, frequency=self.frequency,
            speed_of_sound=self.speed_of_sound,
            reference_amplitude=self.reference_amplitude,
            pose=pose, mount_height=self.mount_height,
        )


@dataclass(frozen=True)
class PhaseSolution:
    """Per-element drive realizing one focal point."""

    phases: tuple[float, ...]       # radians, each in [0, 2*pi)
    amplitudes: tuple[float, ...]   # scale factors in [0, 1]
    focus: Point3D                  # delivered focus
    quality: float                  # 1 iff delivered == requested

    def __post_init__(self):
        if len(self.phases) != len(self.amplitudes):
            raise ValueError("phases and amplitudes must have equal length")

    def scaled(self, factor: float) -> "PhaseSolution":
        return PhaseSolution(
            phases=self.phases,
            amplitudes=tuple(a * factor for a in self.amplitudes),
            focus=self.focus,
            quality=self.quality,
        )


def phases_for_points(element_points: np.ndarray, focus: Point3D, k: float) -> np.ndarray:
    """Conjugate focusing phases for explicit element centers: (-k*d_i) mod 2*pi."""
    d = np.linalg.norm(element_points - np.array(focus.as_tuple()), axis=1)
    if np.any(d == 0.0):
        raise ValueError("focus coincides with an element center")
    return np.mod(-k * d, TWO_PI)


def focus_phases(array: TransducerArray, focus: Point3D, z_min: float = 0.02) -> PhaseSolution:
    """Solve per-element phases focusing the array at `focus`.

    The focus must sit at least `z_min` above the array plane. All amplitudes
    are 1 and quality is 1 (the delivered focus equals the request).
    """
    height = focus.z - array.mount_height
    if height < z_min:
        raise ValueError(
            f"focus height {height:.4f} m above the array plane is below the "
            f"minimum {z_min} m (degenerate focus)"
        )
    phases = phases_for_points(array.element_positions(), focus, array.wavenumber)
    n = array.element_count
    return PhaseSolution(
        phases=tuple(phases.tolist()),
        amplitudes=(1.0,) * n,
        focus=focus,
        quality=1.0,
    )


@dataclass(frozen=True)
class Frustum:
    """Serviceable focus region relative to the array."""

    z_min: float = 0.05
    z_max: float = 0.40
    lateral_margin: float = 0.05


def clamp_to_frustum(array: TransducerArray, requested: Point3D, frustum: Frustum) -> Point3D:
    """Componentwise clamp of the request into the array's serviceable frustum.

    Lateral bounds are axis-aligned in the *array* frame (half extent plus the
    lateral margin); height is clamped relative to the array plane.
    """
    inv = array.pose.inverse()
    lx, ly = inv.apply_point(requested.x, requested.y)
    half_x, half_y = array.half_extent
    lx = min(max(lx, -(half_x + frustum.lateral_margin)), half_x + frustum.lateral_margin)
    ly = min(max(ly, -(half_y + frustum.lateral_margin)), half_y + frustum.lateral_margin)
    height = requested.z - array.mount_height
    height = min(max(height, frustum.z_min), frustum.z_max)
    wx, wy = array.pose.apply_point(lx, ly)
    return Point3D(wx, wy, array.mount_height + height)


def resolve_focus(
    array: TransducerArray,
    requested: Point3D,
    frustum: Frustum = Frustum(),
) -> PhaseSolution:
    """Clamp the request into the serviceable frustum and solve phases.

    quality = max(0, 1 - miss/0.1 m); quality 0 signals haptics unavailable.
    Total on any request (clamping never fails).
    """
    delivered = clamp_to_frustum(array, requested, frustum)
    miss = math.dist(delivered.as_tuple(), requested.as_tuple())
    quality = max(0.0, 1.0 - miss / QUALITY_SCALE)
    solution = focus_phases(array, delivered, z_min=min(frustum.z_min, 0.02))
    return PhaseSolution(
        phases=solution.phases,
        amplitudes=solution.amplitudes,
        focus=delivered,
        quality=quality,
    )
