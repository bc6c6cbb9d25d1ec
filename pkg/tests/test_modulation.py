import math
from fractions import Fraction

import pytest

from sonomat.acoustics import FocalPath, ModulationState, am_envelope, stm_path
from sonomat.geometry import Point3D


def test_envelope_on_in_first_half_period():
    state = ModulationState(frequency=200.0, duty=0.5, burst_remaining=1.0)
    assert am_envelope(state, 0.001) == 1


def test_envelope_off_in_second_half_period():
    state = ModulationState(frequency=200.0, duty=0.5, burst_remaining=1.0)
    assert am_envelope(state, 0.003) == 0


def test_envelope_zero_when_burst_exhausted():
    state = ModulationState(frequency=200.0, duty=0.5, burst_remaining=0.0)
    assert am_envelope(state, 0.001) == 0


def test_envelope_rejects_negative_time():
    state = ModulationState(burst_remaining=1.0)
    with pytest.raises(ValueError):
        am_envelope(state, -0.1)


def test_burst_sample_count_matches_enumeration_oracle():
    # 0.150 s burst at 200 Hz sampled at 1 kHz cell-start times. Exact
    # rational enumeration: sample k is on iff frac(k/1000 / (1/200)) < duty.
    state = ModulationState(frequency=200.0, duty=0.5, burst_remaining=0.150)
    period = Fraction(1, 200)
    expected = 0
    for k in range(150):
        t = Fraction(k, 1000)
        phase = (t % period) / period
        if phase < Fraction(1, 2):
            expected += 1
    assert expected == 90  # 3 of every 5 aligned samples fall in the on half
    got = sum(am_envelope(state, k / 1000.0) for k in range(150))
    assert got == expected


def test_duty_must_be_a_proper_fraction():
    with pytest.raises(ValueError):
        ModulationState(duty=0.0)
    with pytest.raises(ValueError):
        ModulationState(duty=1.0)


def circle_vertices(radius: float, n: int, z: float = 0.15) -> list[Point3D]:
    return [
        Point3D(radius * math.cos(2 * math.pi * i / n),
                radius * math.sin(2 * math.pi * i / n), z)
        for i in range(n)
    ]


def test_circle_path_sample_count():
    # 360-gon of radius 0.020, speed 2 m/s, rate 1 kHz: one cycle holds
    # floor(perimeter / spacing) samples.
    path = stm_path(circle_vertices(0.020, 360), traversal_speed=2.0, update_rate=1000.0)
    perimeter = 360 * 2 * 0.020 * math.sin(math.pi / 360)
    assert path.samples_per_cycle == math.floor(perimeter / 0.002 + 1e-9) == 62


def test_square_path_corners_land_on_samples():
    square = [
        Point3D(0.0, 0.0, 0.15),
        Point3D(0.04, 0.0, 0.15),
        Point3D(0.04, 0.04, 0.15),
        Point3D(0.0, 0.04, 0.15),
    ]
    path = stm_path(square, traversal_speed=1.0, update_rate=500.0)
    assert path.samples_per_cycle == 80
    # arc-length walk oracle: corners sit at s = 0, 0.04, 0.08
    assert path.point(0).as_tuple() == pytest.approx((0.0, 0.0, 0.15), abs=1e-12)
    assert path.point(20).as_tuple() == pytest.approx((0.04, 0.0, 0.15), abs=1e-12)
    assert path.point(40).as_tuple() == pytest.approx((0.04, 0.04, 0.15), abs=1e-12)
    # cycles repeat exactly
    assert path.point(80).as_tuple() == path.point(0).as_tuple()


def test_sample_spacing_constant_along_segment_interiors():
    square = [
        Point3D(0.0, 0.0, 0.1),
        Point3D(0.05, 0.0, 0.1),
        Point3D(0.05, 0.03, 0.1),
        Point3D(0.0, 0.03, 0.1),
    ]
    path = stm_path(square, traversal_speed=0.9, update_rate=700.0)
    pts = path.cycle()
    corners = {(0.0, 0.0), (0.05, 0.0), (0.05, 0.03), (0.0, 0.03)}
    for a, b in zip(pts, pts[1:]):
        step = math.dist(a.as_tuple(), b.as_tuple())
        # only pairs fully inside one segment must be exactly `spacing`
        crosses = any(
            min(a.x, b.x) - 1e-9 < cx < max(a.x, b.x) + 1e-9
            and min(a.y, b.y) - 1e-9 < cy < max(a.y, b.y) + 1e-9
            and (cx, cy) not in {(a.x, a.y), (b.x, b.y)}
            for cx, cy in corners
        )
        if not crosses:
            assert step == pytest.approx(path.spacing, abs=1e-12)


def test_degenerate_paths_rejected():
    with pytest.raises(ValueError):
        stm_path([Point3D(0, 0, 0.1), Point3D(0, 0, 0.1)], 1.0, 100.0)
    with pytest.raises(ValueError):
        stm_path([Point3D(0, 0, 0.1)], 1.0, 100.0)
    with pytest.raises(ValueError):
        stm_path([Point3D(0, 0, 0.1), Point3D(0.1, 0, 0.1)], 0.0, 100.0)


def test_first_sample_is_first_vertex():
    tri = [Point3D(0.1, 0.1, 0.1), Point3D(0.2, 0.1, 0.1), Point3D(0.15, 0.2, 0.1)]
    path = stm_path(tri, traversal_speed=0.5, update_rate=250.0)
    assert path.point(0).as_tuple() == (0.1, 0.1, 0.1)
    assert isinstance(path, FocalPath)
