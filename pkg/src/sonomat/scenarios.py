"""Interactive scenes: piano keys, whack-a-mole and shape outlines.

Scenes are data (JSON documents with geometry, thresholds and a seed); the
rule engines here turn hand tracks into haptic feedback commands and an
event log. Identical (seed, hand stream) pairs produce identical event logs
byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

from sonomat.acoustics.modulation import FocalPath, stm_path
from sonomat.geometry import Point3D
from sonomat.tracking import HandTrack


@dataclass(frozen=True)
class Envelope:
    """Region scenario commands may request focus in (world frame)."""

    x_max: float
    y_max: float
    z_lo: float
    z_hi: float

    def clamp(self, p: Point3D) -> Point3D:
        return Point3D(
            min(max(p.x, 0.0), self.x_max),
            min(max(p.y, 0.0), self.y_max),
            min(max(p.z, self.z_lo), self.z_hi),
        )

    def contains_xy(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.x_max and 0.0 <= y <= self.y_max


@dataclass(frozen=True)
class FeedbackCommand:
    hand: str | None          # None for positional (shape) commands
    focus: Point3D
    burst: float
    modulation_hz: float
    path: FocalPath | None = None


@dataclass(frozen=True)
class ScenarioEvent:
    t: float
    kind: str
    data: dict[str, Any]

    def to_json_dict(self) -> dict[str, Any]:
        return {"t": self.t, "kind": self.kind, **self.data}


@dataclass(frozen=True)
class KeyBox:
    name: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


class Scenario:
    """Base: a named scene stepped once per control tick."""

    def __init__(self, name: str, envelope: Envelope):
        self.name = name
        self.envelope = envelope

    def step(
        self, tracks: dict[str, HandTrack], t: float, dt: float
    ) -> tuple[list[FeedbackCommand], list[ScenarioEvent]]:
        raise NotImplementedError

    def overlay(self) -> dict[str, Any]:
        """Geometry for UI rendering."""
        return {}

    def preposition_targets(self) -> list[tuple[float, float]]:
        """Mat points platforms should idle at when they have no hand."""
        return []

    def _clamped(self, focus: Point3D) -> Point3D:
        # pre-clamp: no command ever requests outside the declared envelope
        return self.envelope.clamp(focus)


class PianoScenario(Scenario):
    def __init__(self, name, envelope, keys: list[KeyBox], plane_height=0.12,
                 hysteresis=0.01, burst=0.15, modulation_hz=200.0):
        super().__init__(name, envelope)
        self.keys = keys
        self.plane_height = plane_height
        self.hysteresis = hysteresis
        self.burst = burst
        self.modulation_hz = modulation_hz
        self._prev_z: dict[str, float] = {}
        self._armed: dict[tuple[str, str], bool] = {}

    def step(self, tracks, t, dt):
        commands: list[FeedbackCommand] = []
        events: list[ScenarioEvent] = []
        for hand in sorted(tracks):
            track = tracks[hand]
            if track.stale:
                continue
            pos = track.position
            prev_z = self._prev_z.get(hand)
            for key in self.keys:
                armed_key = (hand, key.name)
                armed = self._armed.setdefault(armed_key, True)
                if not armed and pos.z > self.plane_height + self.hysteresis:
                    self._armed[armed_key] = True
                    armed = True
                falling = (
                    prev_z is not None
                    and prev_z > self.plane_height >= pos.z
                )
                if armed and falling and key.contains(pos.x, pos.y):
                    self._armed[armed_key] = False
                    events.append(ScenarioEvent(
                        t, "piano_press", {"hand": hand, "key": key.name}
                    ))
                    commands.append(FeedbackCommand(
                        hand=hand,
                        focus=self._clamped(pos),
                        burst=self.burst,
                        modulation_hz=self.modulation_hz,
                    ))
            self._prev_z[hand] = pos.z
        return commands, events

    def overlay(self):
        return {
            "kind": "piano",
            "plane_height": self.plane_height,
            "keys": [
                {"name": k.name, "x0": k.x0, "y0": k.y0, "x1": k.x1, "y1": k.y1}
                for k in self.keys
            ],
        }


class MoleScenario(Scenario):
    def __init__(self, name, envelope, seed=7, spawn_period=3.0, hit_radius=0.03,
                 hit_height=0.10, dwell=0.2, burst=0.3, modulation_hz=200.0,
                 margin=0.085):
        super().__init__(name, envelope)
        self.seed = seed
        self.spawn_period = spawn_period
        self.hit_radius = hit_radius
        self.hit_height = hit_height
        self.dwell = dwell
        self.burst = burst
        self.modulation_hz = modulation_hz
        self.margin = margin
        self._rng = np.random.default_rng(seed)
        self.mole: tuple[float, float] | None = None
        self._spawned_at: float | None = None
        self._dwell: dict[str, float] = {}

    def _spawn(self, t: float) -> ScenarioEvent:
        lo_x, hi_x = self.margin, self.envelope.x_max - self.margin
        lo_y, hi_y = self.margin, self.envelope.y_max - self.margin
        x = float(self._rng.uniform(lo_x, hi_x))
        y = float(self._rng.uniform(lo_y, hi_y))
        self.mole = (x, y)
        self._spawned_at = t
        self._dwell.clear()
        return ScenarioEvent(t, "mole_spawn", {"x": x, "y": y})

    def step(self, tracks, t, dt):
        commands: list[FeedbackCommand] = []
        events: list[ScenarioEvent] = []
        if self.mole is None or t - self._spawned_at >= self.spawn_period:
            events.append(self._spawn(t))
        mx, my = self.mole
        for hand in sorted(tracks):
            track = tracks[hand]
            if track.stale:
                self._dwell[hand] = 0.0
                continue
            pos = track.position
            inside = (
                math.hypot(pos.x - mx, pos.y - my) <= self.hit_radius
                and pos.z < self.hit_height
            )
            if not inside:
                self._dwell[hand] = 0.0
                continue
            before = self._dwell.get(hand, 0.0)
            self._dwell[hand] = before + dt
            if before < self.dwell <= self._dwell[hand]:
                events.append(ScenarioEvent(
                    t, "mole_hit", {"hand": hand, "x": mx, "y": my}
                ))
                commands.append(FeedbackCommand(
                    hand=hand,
                    focus=self._clamped(pos),
                    burst=self.burst,
                    modulation_hz=self.modulation_hz,
                ))
                events.append(self._spawn(t))
                break  # mole relocated; other hands judged next tick
        return commands, events

    def overlay(self):
        return {
            "kind": "mole",
            "mole": list(self.mole) if self.mole else None,
            "hit_radius": self.hit_radius,
        }

    def preposition_targets(self):
        return [self.mole] if self.mole else []


class OutlineScenario(Scenario):
    """Shape outlines rendered by sweeping the focus along closed paths."""

    def __init__(self, name, envelope, outlines: list[list[Point3D]],
                 traversal_speed=1.0, update_rate=1000.0, modulation_hz=200.0):
        super().__init__(name, envelope)
        self.paths = [stm_path(o, traversal_speed, update_rate) for o in outlines]
        self.update_rate = update_rate
        self.modulation_hz = modulation_hz
        self._outlines = outlines

    def step(self, tracks, t, dt):
        commands = []
        for path in self.paths:
            k = int(math.floor(t * self.update_rate + 1e-9))
            commands.append(FeedbackCommand(
                hand=None,
                focus=self._clamped(path.point(k)),
                burst=dt,  # continuous while the scene runs
                modulation_hz=self.modulation_hz,
                path=path,
            ))
        return commands, []

    def overlay(self):
        return {
            "kind": "outline",
            "outlines": [
                [[p.x, p.y, p.z] for p in outline] for outline in self._outlines
            ],
        }

    def preposition_targets(self):
        out = []
        for outline in self._outlines:
            xs = [p.x for p in outline]
            ys = [p.y for p in outline]
            out.append((sum(xs) / len(xs), sum(ys) / len(ys)))
        return out


_COMMON_KEYS = {"name", "type"}
_SCHEMA_KEYS = {
    "piano": _COMMON_KEYS | {"plane_height", "hysteresis", "burst", "modulation_hz", "keys"},
    "mole": _COMMON_KEYS | {"seed", "spawn_period", "hit_radius", "hit_height",
                            "dwell", "burst", "modulation_hz"},
    "outline": _COMMON_KEYS | {"height", "traversal_speed", "update_rate",
                               "modulation_hz", "outlines"},
}


def scenario_from_dict(doc: dict[str, Any], envelope: Envelope, margin: float = 0.085) -> Scenario:
    kind = doc.get("type")
    if kind not in _SCHEMA_KEYS:
        raise ValueError(f"unknown scenario type {kind!r}")
    unknown = set(doc) - _SCHEMA_KEYS[kind]
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    name = doc.get("name", kind)

    if kind == "piano":
        keys = [KeyBox(k["name"], k["x0"], k["y0"], k["x1"], k["y1"])
                for k in doc.get("keys", [])]
        plane = doc.get("plane_height", 0.12)
        for k in keys:
            if not (envelope.contains_xy(k.x0, k.y0) and envelope.contains_xy(k.x1, k.y1)):
                raise ValueError(f"key {k.name!r} lies outside the mat")
        if not (envelope.z_lo <= plane <= envelope.z_hi):
            raise ValueError("piano plane height outside the serviceable envelope")
        return PianoScenario(
            name, envelope, keys,
            plane_height=plane,
            hysteresis=doc.get("hysteresis", 0.01),
            burst=doc.get("burst", 0.15),
            modulation_hz=doc.get("modulation_hz", 200.0),
        )
    if kind == "mole":
        return MoleScenario(
            name, envelope,
            seed=doc.get("seed", 7),
            spawn_period=doc.get("spawn_period", 3.0),
            hit_radius=doc.get("hit_radius", 0.03),
            hit_height=doc.get("hit_height", 0.10),
            dwell=doc.get("dwell", 0.2),
            burst=doc.get("burst", 0.3),
            modulation_hz=doc.get("modulation_hz", 200.0),
            margin=margin,
        )
    height = doc.get("height", 0.15)
    outlines = [
        [Point3D(p[0], p[1], p[2] if len(p) > 2 else height) for p in outline]
        for outline in doc.get("outlines", [])
    ]
    if not outlines:
        raise ValueError("outline scenario needs at least one outline")
    for outline in outlines:
        for p in outline:
            if not envelope.contains_xy(p.x, p.y) or not (envelope.z_lo <= p.z <= envelope.z_hi):
                raise ValueError("outline vertex outside the serviceable envelope")
    return OutlineScenario(
        name, envelope, outlines,
        traversal_speed=doc.get("traversal_speed", 1.0),
        update_rate=doc.get("update_rate", 1000.0),
        modulation_hz=doc.get("modulation_hz", 200.0),
    )


def load_scenario(name_or_path: str, envelope: Envelope, margin: float = 0.085) -> Scenario:
    """Load a scene by shipped name ("piano", "mole", ...) or JSON file path."""
    if name_or_path.endswith(".json"):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        ref = resources.files("sonomat").joinpath(f"data/scenes/{name_or_path}.json")
        try:
            doc = json.loads(ref.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValueError(f"unknown scenario {name_or_path!r}") from None
    return scenario_from_dict(doc, envelope, margin)
