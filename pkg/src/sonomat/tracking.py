"""Hand-stream ingestion, short-horizon prediction and platform assignment.

Tracked-hand frames stream in (live protocol or replay file); an exponential
filter smooths position and velocity per hand, a constant-velocity
extrapolation compensates one control tick of latency, and an optimal
injective assignment keeps each platform under "its" hand.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from itertools import permutations

from sonomat.geometry import Point3D

HANDS = ("left", "right")

DEFAULT_ALPHA = 0.6
DEFAULT_STALENESS_TIMEOUT = 0.5


@dataclass(frozen=True)
class HandFrame:
    """One timestamped tracked-hand observation."""

    t: float
    hand: str
    pos: tuple[float, float, float] | None
    tracked: bool

    def __post_init__(self):
        if self.hand not in HANDS:
            raise ValueError(f"hand must be one of {HANDS}, got {self.hand!r}")
        if not math.isfinite(self.t):
            raise ValueError("timestamp must be finite")


def frame_position_ok(frame: HandFrame) -> bool:
    return (
        frame.pos is not None
        and len(frame.pos) == 3
        and all(isinstance(v, (int, float)) and math.isfinite(v) for v in frame.pos)
    )


@dataclass(frozen=True)
class HandTrack:
    hand: str
    position: Point3D
    velocity: tuple[float, float, float]
    last_update: float
    stale: bool = False


class StaleTrack(ValueError):
    pass


class Tracker:
    """Per-hand ingestion state with out-of-order/non-finite drop counters."""

    def __init__(self, alpha: float = DEFAULT_ALPHA,
                 staleness_timeout: float = DEFAULT_STALENESS_TIMEOUT):
        self.alpha = alpha
        self.staleness_timeout = staleness_timeout
        self._tracks: dict[str, HandTrack] = {}
        self._last_t: dict[str, float] = {}
        self._raw: dict[str, Point3D] = {}
        self.dropped_out_of_order = 0
        self.dropped_non_finite = 0

    def ingest(self, frame: HandFrame) -> HandTrack | None:
        """Fold one frame into the filter; returns the updated track.

        Out-of-order or non-finite frames are dropped (and counted);
        untracked frames only let staleness advance.
        """
        last_t = self._last_t.get(frame.hand)
        if last_t is not None and frame.t <= last_t:
            self.dropped_out_of_order += 1
            return self._tracks.get(frame.hand)
        if frame.tracked and not frame_position_ok(frame):
            self.dropped_non_finite += 1
            return self._tracks.get(frame.hand)
        self._last_t[frame.hand] = frame.t
        if not frame.tracked:
            return self._tracks.get(frame.hand)

        obs = Point3D(*frame.pos)
        self._raw[frame.hand] = obs
        prev = self._tracks.get(frame.hand)
        if prev is None:
            track = HandTrack(frame.hand, obs, (0.0, 0.0, 0.0), frame.t)
        else:
            a = self.alpha
            dt = frame.t - prev.last_update
            pos = Point3D(
                a * obs.x + (1 - a) * prev.position.x,
                a * obs.y + (1 - a) * prev.position.y,
                a * obs.z + (1 - a) * prev.position.z,
            )
            raw = (
                (pos.x - prev.position.x) / dt,
                (pos.y - prev.position.y) / dt,
                (pos.z - prev.position.z) / dt,
            )
            vel = tuple(a * rv + (1 - a) * pv for rv, pv in zip(raw, prev.velocity))
            track = HandTrack(frame.hand, pos, vel, frame.t)
        self._tracks[frame.hand] = track
        return track

    def raw_position(self, hand: str) -> Point3D | None:
        """Last accepted raw observation (the unfiltered ground truth)."""
        return self._raw.get(hand)

    def snapshot(self, now: float) -> dict[str, HandTrack]:
        """Immutable per-hand tracks with the stale flag materialized at `now`."""
        out = {}
        for hand, track in self._tracks.items():
            stale = (now - track.last_update) > self.staleness_timeout
            out[hand] = replace(track, stale=stale)
        return out


def predict(track: HandTrack, horizon: float) -> Point3D:
    """Constant-velocity extrapolation by `horizon` seconds."""
    if track.stale:
        raise StaleTrack(f"track for {track.hand!r} is stale")
    return Point3D(
        track.position.x + track.velocity[0] * horizon,
        track.position.y + track.velocity[1] * horizon,
        track.position.z + track.velocity[2] * horizon,
    )


@dataclass(frozen=True)
class Assignment:
    """Injective platform -> hand map with its total cost in meters."""

    pairs: tuple[tuple[int, str], ...]
    total_cost: float

    def as_dict(self) -> dict[int, str]:
        return dict(self.pairs)


def assign(
    platform_positions: dict[int, tuple[float, float]],
    hand_points: dict[str, tuple[float, float]],
) -> Assignment:
    """Minimum-total-distance injective assignment (hands projected to the mat).

    Serves as many hands as platforms allow; exhaustive search over injective
    maps (fleet sizes are tiny), ties broken toward the lexicographically
    smallest pairing (lowest platform id with lowest hand id).
    """
    if not platform_positions:
        raise ValueError("need at least one platform")
    platforms = sorted(platform_positions)
    hands = sorted(hand_points)
    k = min(len(platforms), len(hands))
    if k == 0:
        return Assignment(pairs=(), total_cost=0.0)

    best: tuple[float, tuple[tuple[int, str], ...]] | None = None
    if len(hands) <= len(platforms):
        # choose which platforms serve, hands in sorted order
        for chosen in permutations(platforms, k):
            pairs = tuple(sorted(zip(chosen, hands)))
            cost = sum(
                math.dist(platform_positions[p], hand_points[h]) for p, h in pairs
            )
            key = (cost, pairs)
            if best is None or key < best:
                best = key
    else:
        for chosen in permutations(hands, k):
            pairs = tuple(zip(platforms, chosen))
            cost = sum(
                math.dist(platform_positions[p], hand_points[h]) for p, h in pairs
            )
            key = (cost, pairs)
            if best is None or key < best:
                best = key
    cost, pairs = best
    return Assignment(pairs=pairs, total_cost=cost)


def load_replay(path: str) -> list[HandFrame]:
    """Parse a JSON Lines replay file of hand frames.

    One object per line: {"t": s, "hand": "left"|"right", "pos": [x,y,z],
    "tracked": bool}. Blank lines are skipped; schema violations raise.
    Per-hand ordering violations are *not* rejected here: the Tracker counts
    and drops them during ingestion, as it does for live input.
    """
    frames: list[HandFrame] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                frame = HandFrame(
                    t=float(obj["t"]),
                    hand=obj["hand"],
                    pos=tuple(float(v) for v in obj["pos"]) if obj.get("pos") is not None else None,
                    tracked=bool(obj["tracked"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad hand frame: {exc}") from exc
            frames.append(frame)
    return frames


def dump_replay(frames: list[HandFrame], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            fh.write(json.dumps({
                "t": f.t,
                "hand": f.hand,
                "pos": list(f.pos) if f.pos is not None else None,
                "tracked": f.tracked,
            }) + "\n")
