"""Global configuration: one JSON document, strictly validated.

Unknown keys anywhere in the document are errors (typo protection), and
validation reports *every* violated constraint, not just the first. The full
schema with defaults is documented in docs/config.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any


class ConfigError(ValueError):
    """Raised with the complete list of configuration violations."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


def _default_mounts(n: int) -> list[tuple[float, float]]:
    """Default drive-module mount offsets (platform frame) for n modules."""
    r = 0.05
    if n == 2:
        return [(-r, 0.0), (r, 0.0)]
    if n == 3:
        angles = (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3)
        return [(r * math.cos(a), r * math.sin(a)) for a in angles]
    return [(-r, -r), (r, -r), (r, r), (-r, r)]


@dataclass(frozen=True)
class Config:
    # mat
    mat_width: float = 0.55
    mat_height: float = 0.55
    # robot drive modules
    max_wheel_speed: float = 0.30
    axle_track: float = 0.026
    payload_capacity: float = 0.2
    sensor_noise: float = 0.0
    sensor_resolution: float = 0.001
    sensor_theta_noise: float = 0.0
    sensor_theta_resolution: float = 0.001
    sensor_delay_ticks: int = 0
    # platforms
    platform_count: int = 2
    robots_per_platform: int = 2
    platform_mass: float = 0.35
    mount_offsets: tuple[tuple[float, float], ...] = ()
    footprint_half_extent: float = 0.085
    platform_speed_cap: float = 0.25
    steering_rate: float = 2 * math.pi
    # transducer array
    array_rows: int = 16
    array_cols: int = 16
    array_pitch: float = 0.010
    element_radius: float = 0.0045
    frequency: float = 40_000.0
    reference_amplitude: float = 1.0
    mount_height: float = 0.04
    # acoustics
    speed_of_sound: float = 346.0
    focus_z_min: float = 0.02
    frustum_z_min: float = 0.05
    frustum_z_max: float = 0.40
    lateral_margin: float = 0.05
    # rates
    sim_hz: int = 1000
    control_hz: int = 50
    snapshot_hz: int = 30
    # controller
    kp: float = 3.0
    k_theta: float = 4.0
    deadband_pos: float = 0.002
    deadband_angle: float = math.radians(2.0)
    omega_cap: float = 2 * math.pi
    # tracking
    alpha: float = 0.6
    staleness_timeout: float = 0.5
    rebalance_period: float = 0.5
    prediction_horizon_ticks: int = 1
    # amplitude modulation
    modulation_hz: float = 200.0
    modulation_duty: float = 0.5
    # rng
    seed: int = 12345

    def __post_init__(self):
        if not self.mount_offsets:
            object.__setattr__(
                self, "mount_offsets", tuple(_default_mounts(self.robots_per_platform))
            )

    @property
    def control_dt(self) -> float:
        return 1.0 / self.control_hz

    @property
    def sim_dt(self) -> float:
        return 1.0 / self.sim_hz

    @property
    def substeps(self) -> int:
        return self.sim_hz // self.control_hz

    @property
    def array_half_extent(self) -> tuple[float, float]:
        """Half extent (x, y) of the element footprint in the array frame."""
        hx = (self.array_cols - 1) * self.array_pitch / 2 + self.element_radius
        hy = (self.array_rows - 1) * self.array_pitch / 2 + self.element_radius
        return (hx, hy)

    def to_json_dict(self) -> dict[str, Any]:
        """Serialize back to the (fully defaulted) document form."""
        return {
            "seed": self.seed,
            "mat": {"width": self.mat_width, "height": self.mat_height},
            "robot": {
                "max_wheel_speed": self.max_wheel_speed,
                "axle_track": self.axle_track,
                "payload_capacity": self.payload_capacity,
                "sensor_noise": self.sensor_noise,
                "sensor_resolution": self.sensor_resolution,
                "sensor_theta_noise": self.sensor_theta_noise,
                "sensor_theta_resolution": self.sensor_theta_resolution,
                "sensor_delay_ticks": self.sensor_delay_ticks,
            },
            "platform": {
                "count": self.platform_count,
                "robots_per_platform": self.robots_per_platform,
                "mass": self.platform_mass,
                "mount_offsets": [list(m) for m in self.mount_offsets],
                "footprint_half_extent": self.footprint_half_extent,
                "speed_cap": self.platform_speed_cap,
                "steering_rate": self.steering_rate,
            },
            "array": {
                "rows": self.array_rows,
                "cols": self.array_cols,
                "pitch": self.array_pitch,
                "element_radius": self.element_radius,
                "frequency": self.frequency,
                "reference_amplitude": self.reference_amplitude,
                "mount_height": self.mount_height,
            },
            "acoustics": {
                "speed_of_sound": self.speed_of_sound,
                "focus_z_min": self.focus_z_min,
                "frustum_z_min": self.frustum_z_min,
                "frustum_z_max": self.frustum_z_max,
                "lateral_margin": self.lateral_margin,
            },
            "rates": {
                "sim_hz": self.sim_hz,
                "control_hz": self.control_hz,
                "snapshot_hz": self.snapshot_hz,
            },
            "control": {
                "kp": self.kp,
                "k_theta": self.k_theta,
                "deadband_pos": self.deadband_pos,
                "deadband_angle_deg": math.degrees(self.deadband_angle),
                "omega_cap": self.omega_cap,
            },
            "tracking": {
                "alpha": self.alpha,
                "staleness_timeout": self.staleness_timeout,
                "rebalance_period": self.rebalance_period,
                "prediction_horizon_ticks": self.prediction_horizon_ticks,
            },
            "modulation": {
                "frequency": self.modulation_hz,
                "duty": self.modulation_duty,
            },
        }


_SECTIONS: dict[str, set[str]] = {
    "mat": {"width", "height"},
    "robot": {
        "max_wheel_speed", "axle_track", "payload_capacity", "sensor_noise",
        "sensor_resolution", "sensor_theta_noise", "sensor_theta_resolution",
        "sensor_delay_ticks",
    },
    "platform": {
        "count", "robots_per_platform", "mass", "mount_offsets",
        "footprint_half_extent", "speed_cap", "steering_rate",
    },
    "array": {
        "rows", "cols", "pitch", "element_radius", "frequency",
        "reference_amplitude", "mount_height",
    },
    "acoustics": {
        "speed_of_sound", "focus_z_min", "frustum_z_min", "frustum_z_max",
        "lateral_margin",
    },
    "rates": {"sim_hz", "control_hz", "snapshot_hz"},
    "control": {"kp", "k_theta", "deadband_pos", "deadband_angle_deg", "omega_cap"},
    "tracking": {
        "alpha", "staleness_timeout", "rebalance_period", "prediction_horizon_ticks",
    },
    "modulation": {"frequency", "duty"},
}


def _check_unknown(doc: dict, errors: list[str]) -> None:
    top_allowed = set(_SECTIONS) | {"seed"}
    for key in doc:
        if key not in top_allowed:
            errors.append(f"unknown key: {key!r}")
    for section, allowed in _SECTIONS.items():
        sub = doc.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            errors.append(f"section {section!r} must be an object")
            continue
        for key in sub:
            if key not in allowed:
                errors.append(f"unknown key: {section}.{key!r}")


def _num(doc: dict, section: str, key: str, default: float, errors: list[str]) -> float:
    value = doc.get(section, {}).get(key, default) if isinstance(doc.get(section, {}), dict) else default
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        errors.append(f"{section}.{key} must be a finite number, got {value!r}")
        return default
    return float(value)


def _intval(doc: dict, section: str, key: str, default: int, errors: list[str]) -> int:
    value = doc.get(section, {}).get(key, default) if isinstance(doc.get(section, {}), dict) else default
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{section}.{key} must be an integer, got {value!r}")
        return default
    return value


def validate_config(doc: dict[str, Any] | None) -> Config:
    """Validate a parsed config document, fill defaults, return a Config.

    Raises ConfigError carrying *all* violations found.
    """
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])
    errors: list[str] = []
    _check_unknown(doc, errors)

    seed = doc.get("seed", 12345)
    if isinstance(seed, bool) or not isinstance(seed, int):
        errors.append(f"seed must be an integer, got {seed!r}")
        seed = 12345

    mat_w = _num(doc, "mat", "width", 0.55, errors)
    mat_h = _num(doc, "mat", "height", 0.55, errors)
    max_wheel = _num(doc, "robot", "max_wheel_speed", 0.30, errors)
    track = _num(doc, "robot", "axle_track", 0.026, errors)
    capacity = _num(doc, "robot", "payload_capacity", 0.2, errors)
    noise = _num(doc, "robot", "sensor_noise", 0.0, errors)
    resolution = _num(doc, "robot", "sensor_resolution", 0.001, errors)
    theta_noise = _num(doc, "robot", "sensor_theta_noise", 0.0, errors)
    theta_res = _num(doc, "robot", "sensor_theta_resolution", 0.001, errors)
    delay = _intval(doc, "robot", "sensor_delay_ticks", 0, errors)

    count = _intval(doc, "platform", "count", 2, errors)
    rpp = _intval(doc, "platform", "robots_per_platform", 2, errors)
    mass = _num(doc, "platform", "mass", 0.35, errors)
    fhe = _num(doc, "platform", "footprint_half_extent", 0.085, errors)
    speed_cap = _num(doc, "platform", "speed_cap", 0.25, errors)
    steering = _num(doc, "platform", "steering_rate", 2 * math.pi, errors)

    rows = _intval(doc, "array", "rows", 16, errors)
    cols = _intval(doc, "array", "cols", 16, errors)
    pitch = _num(doc, "array", "pitch", 0.010, errors)
    elem_r = _num(doc, "array", "element_radius", 0.0045, errors)
    freq = _num(doc, "array", "frequency", 40_000.0, errors)
    ref_amp = _num(doc, "array", "reference_amplitude", 1.0, errors)
    mount_h = _num(doc, "array", "mount_height", 0.04, errors)

    c_sound = _num(doc, "acoustics", "speed_of_sound", 346.0, errors)
    fz_min = _num(doc, "acoustics", "focus_z_min", 0.02, errors)
    z_min = _num(doc, "acoustics", "frustum_z_min", 0.05, errors)
    z_max = _num(doc, "acoustics", "frustum_z_max", 0.40, errors)
    margin = _num(doc, "acoustics", "lateral_margin", 0.05, errors)

    sim_hz = _intval(doc, "rates", "sim_hz", 1000, errors)
    control_hz = _intval(doc, "rates", "control_hz", 50, errors)
    snapshot_hz = _intval(doc, "rates", "snapshot_hz", 30, errors)

    kp = _num(doc, "control", "kp", 3.0, errors)
    k_theta = _num(doc, "control", "k_theta", 4.0, errors)
    db_pos = _num(doc, "control", "deadband_pos", 0.002, errors)
    db_ang = math.radians(_num(doc, "control", "deadband_angle_deg", 2.0, errors))
    omega_cap = _num(doc, "control", "omega_cap", 2 * math.pi, errors)

    alpha = _num(doc, "tracking", "alpha", 0.6, errors)
    staleness = _num(doc, "tracking", "staleness_timeout", 0.5, errors)
    rebalance = _num(doc, "tracking", "rebalance_period", 0.5, errors)
    horizon = _intval(doc, "tracking", "prediction_horizon_ticks", 1, errors)

    mod_hz = _num(doc, "modulation", "frequency", 200.0, errors)
    duty = _num(doc, "modulation", "duty", 0.5, errors)

    raw_mounts = None
    platform_section = doc.get("platform")
    if isinstance(platform_section, dict):
        raw_mounts = platform_section.get("mount_offsets")
    mounts: tuple[tuple[float, float], ...]
    if raw_mounts is None:
        mounts = tuple(_default_mounts(rpp if 2 <= rpp <= 4 else 2))
    else:
        parsed: list[tuple[float, float]] = []
        ok = isinstance(raw_mounts, list)
        if ok:
            for m in raw_mounts:
                if (
                    isinstance(m, (list, tuple)) and len(m) == 2
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in m)
                ):
                    parsed.append((float(m[0]), float(m[1])))
                else:
                    ok = False
                    break
        if not ok:
            errors.append("platform.mount_offsets must be a list of [x, y] pairs")
            parsed = _default_mounts(rpp if 2 <= rpp <= 4 else 2)
        mounts = tuple(parsed)

    # cross-field constraints (collect every violation)
    if not (2 <= rpp <= 4):
        errors.append(f"platform.robots_per_platform must be in [2, 4], got {rpp}")
    if mass > rpp * capacity + 1e-12:
        errors.append(
            f"payload exceeded: platform mass {mass} kg > "
            f"{rpp} x {capacity} kg = {rpp * capacity} kg"
        )
    for name, value in (("mat.width", mat_w), ("mat.height", mat_h)):
        if value <= 0:
            errors.append(f"{name} must be > 0")
    for name, value in (
        ("rates.sim_hz", sim_hz), ("rates.control_hz", control_hz),
        ("rates.snapshot_hz", snapshot_hz),
    ):
        if value <= 0:
            errors.append(f"{name} must be > 0")
    if sim_hz > 0 and control_hz > 0 and sim_hz % control_hz != 0:
        errors.append(f"rates.sim_hz ({sim_hz}) must be an integer multiple of control_hz ({control_hz})")
    if rows < 1 or cols < 1:
        errors.append(f"array must have rows, cols >= 1, got {rows}x{cols}")
    if pitch <= 0:
        errors.append("array.pitch must be > 0")
    if elem_r <= 0:
        errors.append("array.element_radius must be > 0")
    if freq <= 0:
        errors.append("array.frequency must be > 0")
    if c_sound <= 0:
        errors.append("acoustics.speed_of_sound must be > 0")
    if rows >= 1 and cols >= 1 and pitch > 0 and elem_r > 0:
        half_x = (cols - 1) * pitch / 2 + elem_r
        half_y = (rows - 1) * pitch / 2 + elem_r
        if max(half_x, half_y) > fhe + 1e-12:
            errors.append(
                f"array footprint (half extent {max(half_x, half_y):.4f} m) exceeds "
                f"platform footprint_half_extent ({fhe} m)"
            )
    if len(mounts) != rpp and 2 <= rpp <= 4:
        errors.append(
            f"platform.mount_offsets must list one offset per robot "
            f"({rpp}), got {len(mounts)}"
        )
    if len(set(mounts)) != len(mounts):
        errors.append("platform.mount_offsets must be distinct")
    if count < 1:
        errors.append("platform.count must be >= 1")
    if not (0 < duty < 1):
        errors.append(f"modulation.duty must be in (0, 1), got {duty}")
    if mod_hz <= 0:
        errors.append("modulation.frequency must be > 0")
    if not (0 < alpha <= 1):
        errors.append(f"tracking.alpha must be in (0, 1], got {alpha}")
    if staleness <= 0:
        errors.append("tracking.staleness_timeout must be > 0")
    if rebalance <= 0:
        errors.append("tracking.rebalance_period must be > 0")
    if horizon < 0:
        errors.append("tracking.prediction_horizon_ticks must be >= 0")
    if resolution <= 0:
        errors.append("robot.sensor_resolution must be > 0")
    if noise < 0 or theta_noise < 0:
        errors.append("sensor noise sigmas must be >= 0")
    if delay < 0:
        errors.append("robot.sensor_delay_ticks must be >= 0")
    if max_wheel <= 0:
        errors.append("robot.max_wheel_speed must be > 0")
    if track <= 0:
        errors.append("robot.axle_track must be > 0")
    if z_min >= z_max:
        errors.append(f"acoustics.frustum_z_min ({z_min}) must be < frustum_z_max ({z_max})")
    if fz_min <= 0:
        errors.append("acoustics.focus_z_min must be > 0")
    if z_min < fz_min:
        errors.append("acoustics.frustum_z_min must be >= focus_z_min")
    if margin < 0:
        errors.append("acoustics.lateral_margin must be >= 0")
    if speed_cap <= 0:
        errors.append("platform.speed_cap must be > 0")
    if steering <= 0:
        errors.append("platform.steering_rate must be > 0")
    if kp <= 0 or k_theta <= 0:
        errors.append("control gains must be > 0")
    if db_pos <= 0 or db_ang <= 0:
        errors.append("control deadbands must be > 0")
    if omega_cap <= 0:
        errors.append("control.omega_cap must be > 0")

    if errors:
        raise ConfigError(errors)

    return Config(
        mat_width=mat_w, mat_height=mat_h,
        max_wheel_speed=max_wheel, axle_track=track, payload_capacity=capacity,
        sensor_noise=noise, sensor_resolution=resolution,
        sensor_theta_noise=theta_noise, sensor_theta_resolution=theta_res,
        sensor_delay_ticks=delay,
        platform_count=count, robots_per_platform=rpp, platform_mass=mass,
        mount_offsets=mounts, footprint_half_extent=fhe,
        platform_speed_cap=speed_cap, steering_rate=steering,
        array_rows=rows, array_cols=cols, array_pitch=pitch,
        element_radius=elem_r, frequency=freq, reference_amplitude=ref_amp,
        mount_height=mount_h,
        speed_of_sound=c_sound, focus_z_min=fz_min,
        frustum_z_min=z_min, frustum_z_max=z_max, lateral_margin=margin,
        sim_hz=sim_hz, control_hz=control_hz, snapshot_hz=snapshot_hz,
        kp=kp, k_theta=k_theta, deadband_pos=db_pos, deadband_angle=db_ang,
        omega_cap=omega_cap,
        alpha=alpha, staleness_timeout=staleness, rebalance_period=rebalance,
        prediction_horizon_ticks=horizon,
        modulation_hz=mod_hz, modulation_duty=duty,
        seed=seed,
    )


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return validate_config(json.load(fh))
