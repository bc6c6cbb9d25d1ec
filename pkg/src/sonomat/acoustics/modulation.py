"""Amplitude modulation and spatiotemporal focal paths.

The 40 kHz carrier itself is not tactually perceivable; a low-frequency
on/off envelope (default 200 Hz) makes a static focus felt, and sweeping the
focus along a closed path renders shape outlines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from sonomat.geometry import Point3D


@dataclass(frozen=True)
class ModulationState:
    frequency: float = 200.0
    duty: float = 0.5
    burst_remaining: float = 0.0
    envelope: int = 0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("modulation frequency must be > 0")
        if not (0 < self.duty < 1):
            raise ValueError("duty must be in (0, 1)")

    def with_burst(self, seconds: float) -> "ModulationState":
        return replace(self, burst_remaining=max(0.0, seconds))

    def advanced(self, dt: float, t: float) -> "ModulationState":
        remaining = max(0.0, self.burst_remaining - dt)
        state = replace(self, burst_remaining=remaining)
        return replace(state, envelope=am_envelope(state, t))


def am_envelope(state: ModulationState, t: float) -> int:
    """Square-wave envelope: 1 in the first duty*period of each period.

    Always 0 once the burst is exhausted.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if state.burst_remaining <= 0.0:
        return 0
    # phase from the cycle count (not fmod), with period starts snapped:
    # times that are whole periods up to double rounding must read "on"
    cycles = t * state.frequency
    phase = cycles - math.floor(cycles)
    if phase >= 1.0 - 1e-9:
        phase = 0.0
    return 1 if phase < state.duty else 0


@dataclass(frozen=True)
class FocalPath:
    """Arc-length sampled closed path; sample k is at (k mod n) * spacing.

    n = floor(length/spacing): the last partial interval is dropped so every
    cycle restarts exactly at the first vertex. Within a cycle the spacing is
    constant; the wrap gap is shorter than `spacing` unless the spacing
    divides the path length evenly.
    """

    vertices: tuple[Point3D, ...]   # closed: last == first
    spacing: float
    length: float
    samples_per_cycle: int

    def point(self, k: int) -> Point3D:
        s = (k % self.samples_per_cycle) * self.spacing
        return self._point_at_arc(s)

    def cycle(self) -> list[Point3D]:
        return [self.point(k) for k in range(self.samples_per_cycle)]

    def _point_at_arc(self, s: float) -> Point3D:
        remaining = s
        for a, b in zip(self.vertices, self.vertices[1:]):
            seg = math.dist(a.as_tuple(), b.as_tuple())
            if seg == 0.0:
                continue
            if remaining <= seg or (a, b) == (self.vertices[-2], self.vertices[-1]):
                f = min(remaining / seg, 1.0)
                return Point3D(
                    a.x + f * (b.x - a.x),
                    a.y + f * (b.y - a.y),
                    a.z + f * (b.z - a.z),
                )
            remaining -= seg
        return self.vertices[-1]


def stm_path(
    shape: list[Point3D] | tuple[Point3D, ...],
    traversal_speed: float,
    update_rate: float,
) -> FocalPath:
    """Arc-length parameterized focal samples along a closed polyline.

    The path is closed automatically (a segment back to the first vertex is
    implied). Sample spacing is traversal_speed/update_rate; the first sample
    of every cycle is the first vertex.
    """
    if traversal_speed <= 0 or update_rate <= 0:
        raise ValueError("speed and update rate must be > 0")
    verts = list(shape)
    distinct = {v.as_tuple() for v in verts}
    if len(verts) < 2 or len(distinct) < 2:
        raise ValueError("path needs at least 2 distinct vertices")
    if verts[-1].as_tuple() != verts[0].as_tuple():
        verts.append(verts[0])
    length = sum(math.dist(a.as_tuple(), b.as_tuple()) for a, b in zip(verts, verts[1:]))
    if length == 0.0:
        raise ValueError("zero-length path")
    spacing = traversal_speed / update_rate
    n = max(1, math.floor(length / spacing + 1e-9))
    return FocalPath(
        vertices=tuple(verts),
        spacing=spacing,
        length=length,
        samples_per_cycle=n,
    )
