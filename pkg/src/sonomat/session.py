"""The real-time pipeline as one deterministic loop.

Each control tick runs, in fixed order: sense -> estimate -> track snapshot
-> predict -> assign -> control -> actuate (sim substeps) -> focus solve ->
scenario step -> metrics. Given (Config, seed, input stream) every snapshot,
event and metrics row is reproducible bit for bit, independent of wall-clock
scheduling; the loop itself owns no threads.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Any

import numpy as np

from sonomat.acoustics.arrays import (
    Frustum,
    PhaseSolution,
    TransducerArray,
    resolve_focus,
)
from sonomat.acoustics.modulation import ModulationState, am_envelope
from sonomat.config import Config
from sonomat.geometry import Point3D, Pose2D, pose_to_transform
from sonomat.metrics import MetricsLog, MetricsRow
from sonomat.platform import (
    ControlGains,
    DriveParams,
    Platform,
    goto_twist,
    estimate_platform_pose,
    robot_poses,
    step_platform,
)
from sonomat.robots import Robot, sense_mat
from sonomat.scenarios import Envelope, FeedbackCommand, Scenario, ScenarioEvent, load_scenario
from sonomat.tracking import HandFrame, Tracker, assign, predict


@dataclass(frozen=True)
class PlatformStatus:
    """Per-platform outcome of one tick, as broadcast in snapshots."""

    platform_id: int
    pose: Pose2D
    hand: str | None
    solution: PhaseSolution | None
    edge_limited: bool


class Session:
    """Owns all simulation state; stepped by tick() at the control rate."""

    def __init__(self, config: Config):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.tick_index = 0
        self.tracker = Tracker(config.alpha, config.staleness_timeout)
        self.metrics = MetricsLog()
        self.scenario: Scenario | None = None
        self.churn = 0

        self._gains = ControlGains(
            kp=config.kp, k_theta=config.k_theta,
            deadband_pos=config.deadband_pos, deadband_angle=config.deadband_angle,
            speed_cap=config.platform_speed_cap, omega_cap=config.omega_cap,
        )
        self._drive = DriveParams(
            max_wheel_speed=config.max_wheel_speed,
            axle_track=config.axle_track,
            steering_rate=config.steering_rate,
        )
        self._frustum = Frustum(
            z_min=config.frustum_z_min, z_max=config.frustum_z_max,
            lateral_margin=config.lateral_margin,
        )
        self.base_array = TransducerArray(
            rows=config.array_rows, cols=config.array_cols,
            pitch=config.array_pitch, element_radius=config.element_radius,
            frequency=config.frequency, speed_of_sound=config.speed_of_sound,
            reference_amplitude=config.reference_amplitude,
            mount_height=config.mount_height,
        )

        self.platforms: list[Platform] = []
        self._target_theta: dict[int, float] = {}
        for i in range(config.platform_count):
            pose = Pose2D(
                config.mat_width * (i + 1) / (config.platform_count + 1),
                config.mat_height / 2,
                0.0,
            )
            self.platforms.append(Platform.at(
                i, pose, config.mount_offsets, config.footprint_half_extent
            ))
            self._target_theta[i] = pose.theta

        self.robots: dict[int, list[Robot]] = {}
        for p in self.platforms:
            self.robots[p.id] = [
                Robot(id=p.id * len(p.mounts) + j, pose=pose,
                      max_wheel_speed=config.max_wheel_speed,
                      axle_track=config.axle_track)
                for j, pose in enumerate(robot_poses(p))
            ]

        self.estimates: dict[int, Pose2D] = {p.id: p.pose for p in self.platforms}
        self.assignment: dict[int, str] = {}
        self._last_rebalance = -math.inf
        self._known_hands: frozenset[str] = frozenset()
        self._pending: deque[HandFrame] = deque()
        self._sensor_queues: dict[int, deque] = {}
        self.modulation: dict[int, ModulationState] = {
            p.id: ModulationState(config.modulation_hz, config.modulation_duty)
            for p in self.platforms
        }
        self._focus_overrides: dict[int, Point3D] = {}
        self.statuses: dict[int, PlatformStatus] = {
            p.id: PlatformStatus(p.id, p.pose, None, None, False) for p in self.platforms
        }
        self.event_log: list[ScenarioEvent] = []
        self._events_since_snapshot: list[ScenarioEvent] = []
        self._last_snapshot_index = -1

    # ------------------------------------------------------------------ time

    @property
    def sim_time(self) -> float:
        return self.tick_index / self.config.control_hz

    # ----------------------------------------------------------------- input

    def submit_frame(self, frame: HandFrame) -> None:
        """Queue a hand frame; it is ingested at the start of the next tick."""
        self._pending.append(frame)

    def load_scenario(self, name_or_path: str) -> None:
        self.scenario = load_scenario(
            name_or_path, self._scenario_envelope(), self.config.footprint_half_extent
        )
        self._focus_overrides.clear()

    def stop_scenario(self) -> None:
        self.scenario = None
        self._focus_overrides.clear()

    def _scenario_envelope(self) -> Envelope:
        cfg = self.config
        return Envelope(
            x_max=cfg.mat_width, y_max=cfg.mat_height,
            z_lo=cfg.mount_height + cfg.frustum_z_min,
            z_hi=cfg.mount_height + cfg.frustum_z_max,
        )

    # ------------------------------------------------------------------ tick

    def tick(self) -> dict[str, Any] | None:
        """Advance one control period; returns a snapshot when one is due."""
        cfg = self.config
        t_now = self.sim_time
        dt = cfg.control_dt

        while self._pending:
            self.tracker.ingest(self._pending.popleft())

        # sense + estimate (ascending platform id, mount order)
        for p in self.platforms:
            readings = []
            for robot in self.robots[p.id]:
                reading = sense_mat(
                    robot, (cfg.mat_width, cfg.mat_height),
                    cfg.sensor_noise, cfg.sensor_resolution, self.rng,
                    timestamp=t_now,
                    theta_sigma=cfg.sensor_theta_noise,
                    theta_resolution=cfg.sensor_theta_resolution,
                )
                queue = self._sensor_queues.setdefault(robot.id, deque())
                queue.append(reading)
                if len(queue) > cfg.sensor_delay_ticks + 1:
                    queue.popleft()
                readings.append(queue[0] if len(queue) == cfg.sensor_delay_ticks + 1 else None)
            estimate = estimate_platform_pose(readings, p.mounts)
            if estimate is not None:
                self.estimates[p.id] = estimate

        tracks = self.tracker.snapshot(t_now)
        live = {h: tr for h, tr in tracks.items() if not tr.stale}

        horizon = cfg.prediction_horizon_ticks * dt
        predicted = {h: predict(tr, horizon) for h, tr in live.items()}

        # assignment: event-triggered plus periodic rebalance
        hands_now = frozenset(live)
        if hands_now != self._known_hands or (t_now - self._last_rebalance) >= cfg.rebalance_period:
            new_assignment = assign(
                {p.id: (self.estimates[p.id].x, self.estimates[p.id].y) for p in self.platforms},
                {h: (pt.x, pt.y) for h, pt in predicted.items()},
            ).as_dict()
            if new_assignment != self.assignment:
                self.churn += 1
            self.assignment = new_assignment
            self._known_hands = hands_now
            self._last_rebalance = t_now

        targets = self._goto_targets(predicted)

        # control + actuate
        for idx, p in enumerate(self.platforms):
            twist = goto_twist(self.estimates[p.id], targets[p.id], self._gains)
            edge = False
            for _ in range(cfg.substeps):
                p, cmds = step_platform(
                    p, twist, cfg.sim_dt, self._drive,
                    (cfg.mat_width, cfg.mat_height),
                )
                edge = edge or p.edge_limited
            self.platforms[idx] = p
            self.robots[p.id] = [
                Robot(id=r.id, pose=pose, wheel_left=r.wheel_left,
                      wheel_right=r.wheel_right,
                      max_wheel_speed=r.max_wheel_speed, axle_track=r.axle_track)
                for r, pose in zip(self.robots[p.id], robot_poses(p))
            ]
            self.statuses[p.id] = PlatformStatus(p.id, p.pose, None, None, edge)

        # acoustics: focus per platform (override > live hand > none)
        hand_of = dict(self.assignment)
        positional_platform = self._positional_platform()
        for p in self.platforms:
            request: Point3D | None = None
            hand = hand_of.get(p.id)
            if p.id in self._focus_overrides:
                request = self._focus_overrides[p.id]
            elif hand in live:
                request = live[hand].position
            solution = None
            if request is not None:
                array = self.base_array.moved(pose_to_transform(p.pose))
                solution = resolve_focus(array, request, self._frustum)
            status = self.statuses[p.id]
            self.statuses[p.id] = PlatformStatus(
                p.id, status.pose, hand, solution, status.edge_limited
            )
            self.modulation[p.id] = self.modulation[p.id].advanced(dt, t_now)

        # scenario
        self._focus_overrides.clear()
        events: list[ScenarioEvent] = []
        if self.scenario is not None:
            commands, events = self.scenario.step(tracks, t_now, dt)
            for cmd in commands:
                self._apply_command(cmd, hand_of, positional_platform)
            self.event_log.extend(events)
            self._events_since_snapshot.extend(events)

        self._append_metrics(t_now, live)
        self.tick_index += 1

        if self._snapshot_due():
            self._last_snapshot_index = self.tick_index
            return self.snapshot(drain_events=True)
        return None

    # -------------------------------------------------------------- internals

    def _goto_targets(self, predicted: dict[str, Point3D]) -> dict[int, Pose2D]:
        cfg = self.config
        fhe = cfg.footprint_half_extent
        lo_x, hi_x = fhe, cfg.mat_width - fhe
        lo_y, hi_y = fhe, cfg.mat_height - fhe

        raw: dict[int, tuple[float, float]] = {}
        spare = [p.id for p in self.platforms if p.id not in self.assignment]
        pre_targets = self.scenario.preposition_targets() if self.scenario else []
        for p in self.platforms:
            hand = self.assignment.get(p.id)
            if hand is not None and hand in predicted:
                pt = predicted[hand]
                raw[p.id] = (pt.x, pt.y)
            elif p.id in spare and pre_targets:
                raw[p.id] = pre_targets[spare.index(p.id) % len(pre_targets)]
            else:
                est = self.estimates[p.id]
                raw[p.id] = (est.x, est.y)

        # clamp into the reachable envelope
        clamped = {
            pid: (min(max(x, lo_x), hi_x), min(max(y, lo_y), hi_y))
            for pid, (x, y) in raw.items()
        }

        # separation: push target pairs apart along their separating axis;
        # a platform actually serving a hand is pinned when its neighbor is
        # spare (the spare yields), equal pairs split the push evenly
        ids = sorted(clamped)
        min_sep = 2 * fhe
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                ax, ay = clamped[a]
                bx, by = clamped[b]
                dx, dy = bx - ax, by - ay
                dist = math.hypot(dx, dy)
                if dist >= min_sep:
                    continue
                if dist < 1e-12:
                    dx, dy, dist = 1.0, 0.0, 1.0  # coincident: split along x
                deficit = min_sep - dist
                serving_a = a in self.assignment
                serving_b = b in self.assignment
                if serving_a == serving_b:
                    share_a = share_b = deficit / 2
                else:
                    share_a = 0.0 if serving_a else deficit
                    share_b = 0.0 if serving_b else deficit
                ux, uy = dx / dist, dy / dist
                clamped[a] = (
                    min(max(ax - ux * share_a, lo_x), hi_x),
                    min(max(ay - uy * share_a, lo_y), hi_y),
                )
                clamped[b] = (
                    min(max(bx + ux * share_b, lo_x), hi_x),
                    min(max(by + uy * share_b, lo_y), hi_y),
                )

        return {
            pid: Pose2D(x, y, self._target_theta[pid]) for pid, (x, y) in clamped.items()
        }

    def _positional_platform(self) -> int:
        spare = [p.id for p in self.platforms if p.id not in self.assignment]
        return spare[0] if spare else self.platforms[0].id

    def _apply_command(
        self, cmd: FeedbackCommand, hand_of: dict[int, str], positional_platform: int
    ) -> None:
        """Route a scenario command: bursts to the serving platform, shape
        focus overrides to the designated positional platform (next tick)."""
        if cmd.hand is None:
            pid = positional_platform
        else:
            serving = [p for p, h in hand_of.items() if h == cmd.hand]
            if not serving:
                return
            pid = serving[0]
        state = self.modulation[pid]
        self.modulation[pid] = ModulationState(
            frequency=cmd.modulation_hz, duty=state.duty,
            burst_remaining=max(state.burst_remaining, cmd.burst),
            envelope=state.envelope,
        )
        if cmd.hand is None:
            self._focus_overrides[pid] = cmd.focus

    def _append_metrics(self, t_now: float, live) -> None:
        error: dict[str, float | None] = {}
        quality: dict[str, float | None] = {}
        serving = {h: pid for pid, h in self.assignment.items()}
        for hand, track in live.items():
            pid = serving.get(hand)
            status = self.statuses.get(pid) if pid is not None else None
            if status is not None and status.solution is not None:
                focus = status.solution.focus
                raw = self.tracker.raw_position(hand)
                ref = raw if raw is not None else track.position
                error[hand] = math.hypot(focus.x - ref.x, focus.y - ref.y)
                quality[hand] = status.solution.quality
            else:
                error[hand] = None
                quality[hand] = None
        edge_count = sum(1 for s in self.statuses.values() if s.edge_limited)
        self.metrics.append(MetricsRow(
            tick=self.tick_index,
            t=t_now,
            error=error,
            quality=quality,
            churn=self.churn,
            edge_fraction=edge_count / max(1, len(self.platforms)),
        ))

    def _snapshot_due(self) -> bool:
        cfg = self.config
        prev = (self.tick_index - 1) * cfg.snapshot_hz // cfg.control_hz
        now = self.tick_index * cfg.snapshot_hz // cfg.control_hz
        return now > prev

    # --------------------------------------------------------------- outputs

    def snapshot(self, drain_events: bool = False) -> dict[str, Any]:
        """JSON-ready full world state; a pure function of session state.

        With drain_events, scenario events accumulated since the previous
        broadcast are included and the buffer is emptied (broadcast path).
        """
        tracks = self.tracker.snapshot(self.sim_time)
        robots = []
        for p in self.platforms:
            for r in self.robots[p.id]:
                robots.append({
                    "id": r.id,
                    "platform": p.id,
                    "pose": [r.pose.x, r.pose.y, r.pose.theta],
                })
        platforms = []
        for p in self.platforms:
            status = self.statuses[p.id]
            sol = status.solution
            platforms.append({
                "id": p.id,
                "pose": [p.pose.x, p.pose.y, p.pose.theta],
                "hand": status.hand,
                "focus": list(sol.focus.as_tuple()) if sol else None,
                "quality": sol.quality if sol else 0.0,
                "envelope": am_envelope(self.modulation[p.id], self.sim_time),
                "edge_limited": status.edge_limited,
                "module_headings": list(p.module_headings),
                "footprint_half_extent": p.footprint_half_extent,
            })
        hands = []
        for hand in sorted(tracks):
            tr = tracks[hand]
            hands.append({
                "hand": hand,
                "pos": list(tr.position.as_tuple()),
                "vel": list(tr.velocity),
                "stale": tr.stale,
            })
        events = [e.to_json_dict() for e in self._events_since_snapshot]
        if drain_events:
            self._events_since_snapshot = []
        return {
            "type": "snapshot",
            "tick": self.tick_index,
            "t": self.sim_time,
            "robots": robots,
            "platforms": platforms,
            "hands": hands,
            "events": events,
            "metrics": {
                "assignment_churn": self.churn,
                "dropped_out_of_order": self.tracker.dropped_out_of_order,
                "dropped_non_finite": self.tracker.dropped_non_finite,
            },
            "scenario": (
                {"name": self.scenario.name, "overlay": self.scenario.overlay()}
                if self.scenario else None
            ),
        }

    def state_hash(self) -> str:
        """SHA-256 over the canonical snapshot encoding.

        Drop counters are excluded: they tally *rejected* inputs, and
        rejected inputs must never change the session state hash.
        """
        snap = self.snapshot()
        snap["metrics"] = {"assignment_churn": snap["metrics"]["assignment_churn"]}
        blob = json.dumps(snap, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def run_replay(
    config: Config,
    frames: list[HandFrame],
    scenario: str | None = None,
    extra_ticks: int = 0,
) -> Session:
    """Headless deterministic run: feed frames by timestamp, tick to the end.

    Runs floor(max_t * control_hz) + 1 ticks (tick starts t=0 .. max_t
    inclusive), plus extra_ticks; a frame is delivered before the first tick
    whose start time is >= its timestamp.
    """
    session = Session(config)
    if scenario:
        session.load_scenario(scenario)
    ordered = sorted(frames, key=lambda f: f.t)
    max_t = ordered[-1].t if ordered else 0.0
    n_ticks = math.floor(max_t * config.control_hz) + 1 + extra_ticks
    i = 0
    for _ in range(n_ticks):
        t_now = session.sim_time
        while i < len(ordered) and ordered[i].t <= t_now:
            session.submit_frame(ordered[i])
            i += 1
        session.tick()
    return session
