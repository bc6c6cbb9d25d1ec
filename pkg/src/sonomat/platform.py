"""Rigid transducer platform carried by 2-4 pivot-mounted drive modules.

Several nonholonomic differential-drive modules on free pivots make the
platform holonomic: each module steers toward the rigid-body velocity its
mount point requires and drives with the projection of that velocity onto
its current heading (no reverse drive; a misaligned module steers in place).
The platform integrates the twist that the module velocities actually
realize (least-squares rigid fit), so motion degrades gracefully during
heading transients and matches the commanded twist exactly once aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from sonomat.geometry import Pose2D, wrap_angle
from sonomat.robots import MatReading

_EDGE_EPS = 1e-12


@dataclass(frozen=True)
class Twist2D:
    """Planar rigid-body velocity in the world frame."""

    vx: float
    vy: float
    omega: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.omega)):
            raise ValueError("twist components must be finite")

    @classmethod
    def zero(cls) -> "Twist2D":
        return cls(0.0, 0.0, 0.0)

    def scaled(self, s: float) -> "Twist2D":
        return Twist2D(self.vx * s, self.vy * s, self.omega * s)

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class DriveParams:
    max_wheel_speed: float = 0.30
    axle_track: float = 0.026
    steering_rate: float = 2 * math.pi


@dataclass(frozen=True)
class Platform:
    id: int
    pose: Pose2D
    mounts: tuple[tuple[float, float], ...]   # module mount offsets, platform frame
    module_headings: tuple[float, ...]        # pivot steering state, platform frame
    footprint_half_extent: float = 0.085
    edge_limited: bool = False

    def __post_init__(self):
        if not (2 <= len(self.mounts) <= 4):
            raise ValueError("platform needs 2-4 drive modules")
        if len(set(self.mounts)) != len(self.mounts):
            raise ValueError("mount offsets must be distinct")
        if len(self.module_headings) != len(self.mounts):
            raise ValueError("one heading per module required")

    @classmethod
    def at(cls, platform_id: int, pose: Pose2D, mounts, footprint_half_extent=0.085) -> "Platform":
        return cls(
            id=platform_id,
            pose=pose,
            mounts=tuple(tuple(m) for m in mounts),
            module_headings=(0.0,) * len(mounts),
            footprint_half_extent=footprint_half_extent,
        )


def robot_poses(platform: Platform) -> list[Pose2D]:
    """Ground-truth pose of each mounted robot, derived rigidly."""
    c = math.cos(platform.pose.theta)
    s = math.sin(platform.pose.theta)
    poses = []
    for (mx, my), heading in zip(platform.mounts, platform.module_headings):
        x = platform.pose.x + c * mx - s * my
        y = platform.pose.y + s * mx + c * my
        poses.append(Pose2D(x, y, wrap_angle(platform.pose.theta + heading)))
    return poses


def estimate_platform_pose(
    readings: list[MatReading | None], mounts: tuple[tuple[float, float], ...]
) -> Pose2D | None:
    """Least-squares rigid registration of mount offsets onto measurements.

    readings[i] pairs with mounts[i]; invalid or missing readings are
    skipped. Returns None when fewer than 2 valid readings remain (the
    caller holds its last estimate).
    """
    pairs = [
        (m, r.pose) for m, r in zip(mounts, readings) if r is not None and r.valid
    ]
    if len(pairs) < 2:
        return None
    local = np.array([p[0] for p in pairs])
    world = np.array([[p[1].x, p[1].y] for p in pairs])
    lc = local.mean(axis=0)
    wc = world.mean(axis=0)
    dl = local - lc
    dw = world - wc
    num = float(np.sum(dl[:, 0] * dw[:, 1] - dl[:, 1] * dw[:, 0]))
    den = float(np.sum(dl[:, 0] * dw[:, 0] + dl[:, 1] * dw[:, 1]))
    theta = math.atan2(num, den)
    c, s = math.cos(theta), math.sin(theta)
    tx = wc[0] - (c * lc[0] - s * lc[1])
    ty = wc[1] - (s * lc[0] + c * lc[1])
    return Pose2D(tx, ty, theta)


def registration_cost(
    pose: Pose2D, mounts, positions: np.ndarray
) -> float:
    """Sum of squared residuals of mounts placed by `pose` vs measured positions."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    total = 0.0
    for (mx, my), (px, py) in zip(mounts, positions):
        rx = pose.x + c * mx - s * my - px
        ry = pose.y + s * mx + c * my - py
        total += rx * rx + ry * ry
    return total


@dataclass(frozen=True)
class ModuleCommand:
    wheel_left: float
    wheel_right: float
    heading: float          # new pivot heading, platform frame
    heading_world: float
    drive_speed: float
    velocity: tuple[float, float]  # realized module velocity, world frame


@dataclass(frozen=True)
class ModuleCommandSet:
    commands: tuple[ModuleCommand, ...]
    scale: float
    scaled_desired: Twist2D
    realized: Twist2D


def fit_twist(points: np.ndarray, velocities: np.ndarray) -> Twist2D:
    """Least-squares rigid twist through velocity samples at world offsets."""
    m = len(points)
    sx = float(points[:, 0].sum())
    sy = float(points[:, 1].sum())
    srr = float((points ** 2).sum())
    ata = np.array([
        [m, 0.0, -sy],
        [0.0, m, sx],
        [-sy, sx, srr],
    ])
    atb = np.array([
        float(velocities[:, 0].sum()),
        float(velocities[:, 1].sum()),
        float((points[:, 0] * velocities[:, 1] - points[:, 1] * velocities[:, 0]).sum()),
    ])
    vx, vy, omega = np.linalg.solve(ata, atb)
    return Twist2D(float(vx), float(vy), float(omega))


def twist_to_module_commands(
    platform: Platform,
    desired: Twist2D,
    dt: float,
    drive: DriveParams = DriveParams(),
) -> ModuleCommandSet:
    """Allocate a desired platform twist to the pivot-mounted drive modules.

    The rigid-body field u_i = v + omega x r_i is scaled by a single factor
    s in (0, 1] so the largest module speed fits the wheel-speed limit; each
    module then steers toward its u_i direction at the bounded steering rate
    and drives with the (non-negative) projection onto its new heading.
    """
    theta = platform.pose.theta
    c, s_ = math.cos(theta), math.sin(theta)
    offsets = np.array([
        (c * mx - s_ * my, s_ * mx + c * my) for mx, my in platform.mounts
    ])
    u = np.column_stack([
        desired.vx - desired.omega * offsets[:, 1],
        desired.vy + desired.omega * offsets[:, 0],
    ])
    speeds = np.hypot(u[:, 0], u[:, 1])
    peak = float(speeds.max())
    scale = 1.0 if peak <= drive.max_wheel_speed or peak == 0.0 else drive.max_wheel_speed / peak
    su = u * scale

    commands = []
    velocities = np.zeros_like(su)
    max_step = drive.steering_rate * dt
    for i, (ux, uy) in enumerate(su):
        heading_world = wrap_angle(theta + platform.module_headings[i])
        magnitude = math.hypot(ux, uy)
        if magnitude > 1e-12:
            target = math.atan2(uy, ux)
            error = wrap_angle(target - heading_world)
            step = min(max(error, -max_step), max_step)
            heading_world = wrap_angle(heading_world + step)
            residual = wrap_angle(target - heading_world)
            drive_speed = max(0.0, magnitude * math.cos(residual))
            steer_rate = step / dt
        else:
            drive_speed = 0.0
            steer_rate = 0.0
        vx = drive_speed * math.cos(heading_world)
        vy = drive_speed * math.sin(heading_world)
        velocities[i] = (vx, vy)
        half_track = drive.axle_track / 2.0
        commands.append(ModuleCommand(
            wheel_left=drive_speed - steer_rate * half_track,
            wheel_right=drive_speed + steer_rate * half_track,
            heading=wrap_angle(heading_world - theta),
            heading_world=heading_world,
            drive_speed=drive_speed,
            velocity=(vx, vy),
        ))

    realized = fit_twist(offsets, velocities)
    return ModuleCommandSet(
        commands=tuple(commands),
        scale=scale,
        scaled_desired=desired.scaled(scale),
        realized=realized,
    )


@dataclass(frozen=True)
class ControlGains:
    kp: float = 3.0
    k_theta: float = 4.0
    deadband_pos: float = 0.002
    deadband_angle: float = math.radians(2.0)
    speed_cap: float = 0.25
    omega_cap: float = 2 * math.pi


def goto_twist(estimated: Pose2D, target: Pose2D, gains: ControlGains = ControlGains()) -> Twist2D:
    """Proportional go-to-pose law with deadband and norm clamping."""
    ex = target.x - estimated.x
    ey = target.y - estimated.y
    e_theta = wrap_angle(target.theta - estimated.theta)
    if math.hypot(ex, ey) <= gains.deadband_pos and abs(e_theta) <= gains.deadband_angle:
        return Twist2D.zero()
    vx = gains.kp * ex
    vy = gains.kp * ey
    speed = math.hypot(vx, vy)
    if speed > gains.speed_cap:
        f = gains.speed_cap / speed
        vx *= f
        vy *= f
    omega = min(max(gains.k_theta * e_theta, -gains.omega_cap), gains.omega_cap)
    return Twist2D(vx, vy, omega)


def se2_step(pose: Pose2D, twist: Twist2D, dt: float) -> Pose2D:
    """Exact screw-motion step: the twist is held constant in the body frame."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    bvx = c * twist.vx + s * twist.vy
    bvy = -s * twist.vx + c * twist.vy
    phi = twist.omega * dt
    if abs(twist.omega) > 1e-9:
        a = math.sin(phi) / twist.omega
        b = (1.0 - math.cos(phi)) / twist.omega
        dxb = a * bvx - b * bvy
        dyb = b * bvx + a * bvy
    else:
        dxb = bvx * dt
        dyb = bvy * dt
    return Pose2D(
        pose.x + c * dxb - s * dyb,
        pose.y + s * dxb + c * dyb,
        wrap_angle(pose.theta + phi),
    )


def step_platform(
    platform: Platform,
    desired: Twist2D,
    dt: float,
    drive: DriveParams = DriveParams(),
    mat_size: tuple[float, float] = (0.55, 0.55),
) -> tuple[Platform, ModuleCommandSet]:
    """Advance the platform by dt under a desired twist.

    Integrates the realized twist (exact screw motion), advances the module
    pivots, and clamps the footprint onto the mat (project-and-stop at the
    edges, flagged edge-limited rather than faulted).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    cmds = twist_to_module_commands(platform, desired, dt, drive)
    pose = se2_step(platform.pose, cmds.realized, dt)

    fhe = platform.footprint_half_extent
    x = min(max(pose.x, fhe), mat_size[0] - fhe)
    y = min(max(pose.y, fhe), mat_size[1] - fhe)
    limited = abs(x - pose.x) > _EDGE_EPS or abs(y - pose.y) > _EDGE_EPS
    if limited:
        pose = Pose2D(x, y, pose.theta)

    stepped = replace(
        platform,
        pose=pose,
        module_headings=tuple(cmd.heading for cmd in cmds.commands),
        edge_limited=limited,
    )
    return stepped, cmds
