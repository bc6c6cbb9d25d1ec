"""Differential-drive robot kinematics and mat-based position sensing.

The drive model is the exact unicycle arc: for constant wheel speeds the pose
follows a circular arc (or a straight line when the turn rate vanishes), so
stepping dt twice equals stepping 2*dt once. Sensing quantizes the ground
truth onto the printed mat's grid and reports nothing off the mat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from sonomat.geometry import Pose2D, wrap_angle

OMEGA_STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class Robot:
    id: int
    pose: Pose2D
    wheel_left: float = 0.0
    wheel_right: float = 0.0
    max_wheel_speed: float = 0.30
    axle_track: float = 0.026


@dataclass(frozen=True)
class MatReading:
    robot_id: int
    pose: Pose2D
    timestamp: float
    valid: bool


def step_robot(robot: Robot, command: tuple[float, float], dt: float) -> Robot:
    """Advance the robot by dt under wheel-speed commands (left, right).

    Commands are clamped to +-max_wheel_speed. Uses the exact arc update when
    turning, a straight-line update otherwise.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    cap = robot.max_wheel_speed
    vl = min(max(command[0], -cap), cap)
    vr = min(max(command[1], -cap), cap)
    v = (vl + vr) / 2.0
    omega = (vr - vl) / robot.axle_track
    x, y, theta = robot.pose.x, robot.pose.y, robot.pose.theta
    if abs(omega) > OMEGA_STRAIGHT_EPS:
        r = v / omega
        x += r * (math.sin(theta + omega * dt) - math.sin(theta))
        y -= r * (math.cos(theta + omega * dt) - math.cos(theta))
    else:
        x += v * math.cos(theta) * dt
        y += v * math.sin(theta) * dt
    theta = wrap_angle(theta + omega * dt)
    return replace(robot, pose=Pose2D(x, y, theta), wheel_left=vl, wheel_right=vr)


def quantize(value: float, resolution: float) -> float:
    return round(value / resolution) * resolution


def sense_mat(
    robot: Robot,
    mat_size: tuple[float, float],
    noise_sigma: float,
    resolution: float,
    rng: np.random.Generator,
    timestamp: float = 0.0,
    theta_sigma: float = 0.0,
    theta_resolution: float = 0.001,
) -> MatReading:
    """Measured pose: ground truth + per-axis Gaussian noise, quantized.

    The reading is invalid (robot reads nothing) when the ground-truth
    position is off the mat; valid measurements are clamped onto the mat (the
    printed pattern cannot report positions beyond itself). Noise draws
    happen even for invalid readings so the RNG stream is independent of
    where robots are.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    nx, ny, nt = rng.normal(0.0, 1.0, size=3)
    x = quantize(robot.pose.x + noise_sigma * nx, resolution)
    y = quantize(robot.pose.y + noise_sigma * ny, resolution)
    theta = wrap_angle(quantize(robot.pose.theta + theta_sigma * nt, theta_resolution))
    on_mat = 0.0 <= robot.pose.x <= mat_size[0] and 0.0 <= robot.pose.y <= mat_size[1]
    if on_mat:
        x = min(max(x, 0.0), mat_size[0])
        y = min(max(y, 0.0), mat_size[1])
    return MatReading(
        robot_id=robot.id,
        pose=Pose2D(x, y, theta),
        timestamp=timestamp,
        valid=on_mat,
    )
