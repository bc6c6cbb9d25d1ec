"""Wire protocol: one JSON object per WebSocket text frame, "type"-keyed.

Client -> server: hand, scenario, config_get, reset, field_get.
Server -> client: snapshot, event, error, config, field.
Malformed or unknown frames get an error reply and the connection stays
open; frames over 64 KiB close the connection. Full field-by-field schema
in docs/protocol.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from sonomat.tracking import HandFrame

MAX_FRAME_BYTES = 64 * 1024


class ProtocolError(ValueError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class FrameTooLarge(ProtocolError):
    pass


@dataclass(frozen=True)
class HandMessage:
    frame: HandFrame

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "type": "hand",
            "t": self.frame.t,
            "hand": self.frame.hand,
            "pos": list(self.frame.pos) if self.frame.pos is not None else None,
            "tracked": self.frame.tracked,
        }


@dataclass(frozen=True)
class ScenarioMessage:
    action: str            # "load" | "stop"
    name: str | None

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": "scenario", "action": self.action}
        if self.name is not None:
            out["name"] = self.name
        return out


@dataclass(frozen=True)
class ConfigGetMessage:
    def to_json_dict(self) -> dict[str, Any]:
        return {"type": "config_get"}


@dataclass(frozen=True)
class ResetMessage:
    seed: int

    def to_json_dict(self) -> dict[str, Any]:
        return {"type": "reset", "seed": self.seed}


@dataclass(frozen=True)
class FieldGetMessage:
    platform: int = 0
    extent: float = 0.06
    resolution: float = 0.002

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "type": "field_get",
            "platform": self.platform,
            "extent": self.extent,
            "resolution": self.resolution,
        }


Message = HandMessage | ScenarioMessage | ConfigGetMessage | ResetMessage | FieldGetMessage


def _require_number(obj: dict, key: str, *, finite=True) -> float:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"malformed: {key!r} must be a number")
    if finite and not math.isfinite(value):
        raise ProtocolError(f"malformed: {key!r} must be finite")
    return float(value)


def decode_message(raw: str | bytes) -> Message:
    """Parse and validate one inbound frame.

    Raises FrameTooLarge (close the connection) or ProtocolError (reply with
    an error message, keep the connection).
    """
    data = raw.encode("utf-8") if isinstance(raw, str) else raw
    if len(data) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame of {len(data)} bytes exceeds {MAX_FRAME_BYTES}")
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"malformed: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("malformed: frame must be a JSON object")
    kind = obj.get("type")

    if kind == "hand":
        t = _require_number(obj, "t")
        hand = obj.get("hand")
        if hand not in ("left", "right"):
            raise ProtocolError("malformed: 'hand' must be 'left' or 'right'")
        tracked = obj.get("tracked")
        if not isinstance(tracked, bool):
            raise ProtocolError("malformed: 'tracked' must be a boolean")
        pos = obj.get("pos")
        if tracked:
            if (
                not isinstance(pos, list) or len(pos) != 3
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pos)
            ):
                raise ProtocolError("malformed: 'pos' must be [x, y, z]")
            pos_tuple = tuple(float(v) for v in pos)
        else:
            pos_tuple = None
        return HandMessage(HandFrame(t=t, hand=hand, pos=pos_tuple, tracked=tracked))

    if kind == "scenario":
        action = obj.get("action")
        if action not in ("load", "stop"):
            raise ProtocolError("malformed: 'action' must be 'load' or 'stop'")
        name = obj.get("name")
        if action == "load" and not isinstance(name, str):
            raise ProtocolError("malformed: 'name' required to load a scenario")
        return ScenarioMessage(action=action, name=name if isinstance(name, str) else None)

    if kind == "config_get":
        return ConfigGetMessage()

    if kind == "reset":
        seed = obj.get("seed")
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ProtocolError("malformed: 'seed' must be an integer")
        return ResetMessage(seed=seed)

    if kind == "field_get":
        platform = obj.get("platform", 0)
        if isinstance(platform, bool) or not isinstance(platform, int):
            raise ProtocolError("malformed: 'platform' must be an integer")
        extent = _require_number(obj, "extent") if "extent" in obj else 0.06
        resolution = _require_number(obj, "resolution") if "resolution" in obj else 0.002
        if extent <= 0 or resolution <= 0:
            raise ProtocolError("malformed: extent and resolution must be > 0")
        return FieldGetMessage(platform=platform, extent=extent, resolution=resolution)

    raise ProtocolError(f"unknown message type {kind!r}")


def encode_message(payload: dict[str, Any] | Message) -> str:
    """Serialize one outbound frame (or re-encode an inbound message)."""
    if not isinstance(payload, dict):
        payload = payload.to_json_dict()
    return json.dumps(payload, separators=(",", ":"))


def error_message(reason: str) -> str:
    return encode_message({"type": "error", "reason": reason})
