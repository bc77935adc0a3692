"""Line-delimited JSON wire format for the session server.

One message per line; canonical encoding (sorted keys, compact separators,
UTF-8, trailing newline) so identical messages always serialize to identical
bytes. The envelope is strict ({type, seq, payload} only, known types only);
payloads tolerate unknown fields for forward compatibility: they are
preserved through decode and ignored by the engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import MalformedFrame, SchemaViolation, UnencodableValue, UnknownType
from .tracking import ROLES

PROTOCOL_VERSION = 1

MSG_TYPES = ("pose_update", "command", "state_snapshot", "event", "hello", "error")


@dataclass(frozen=True)
class Message:
    type: str
    seq: int
    payload: dict[str, Any] = field(default_factory=dict)


def encode(msg: Message) -> bytes:
    """Canonical wire bytes: one UTF-8 JSON line, sorted keys, no interior
    newlines. Non-finite numbers have no canonical form and are rejected."""
    obj = {"payload": msg.payload, "seq": msg.seq, "type": msg.type}
    try:
        text = json.dumps(obj, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False, allow_nan=False)
    except ValueError as e:
        raise UnencodableValue(str(e)) from e
    except TypeError as e:
        raise UnencodableValue(f"unserializable payload: {e}") from e
    return text.encode("utf-8") + b"\n"


def decode(line: bytes | str) -> Message:
    """Parse and validate one complete line.

    Raises MalformedFrame for anything that is not one JSON object per line,
    UnknownType for unrecognized message types, and SchemaViolation (with the
    offending field path) for shape errors. Unknown payload fields are kept in
    the payload so canonical lines round-trip byte-exactly.
    """
    if isinstance(line, bytes):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedFrame(f"invalid utf-8: {e}") from e
    else:
        text = line
    text = text.strip("\r\n")
    if not text or "\n" in text:
        raise MalformedFrame("expected exactly one JSON object per line")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedFrame(f"invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise MalformedFrame("frame is not a JSON object")

    extra = set(obj) - {"type", "seq", "payload"}
    if extra:
        raise SchemaViolation(sorted(extra)[0], "unknown envelope field")
    for key in ("type", "seq", "payload"):
        if key not in obj:
            raise SchemaViolation(key, "missing")
    mtype = obj["type"]
    if not isinstance(mtype, str):
        raise SchemaViolation("type", "must be a string")
    if mtype not in MSG_TYPES:
        raise UnknownType(f"unknown message type {mtype!r}")
    seq = obj["seq"]
    if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
        raise SchemaViolation("seq", "must be a non-negative integer")
    payload = obj["payload"]
    if not isinstance(payload, dict):
        raise SchemaViolation("payload", "must be an object")

    _VALIDATORS[mtype](payload)
    return Message(mtype, seq, payload)


# -- per-type payload validation ----------------------------------------------


def _need(payload: dict, name: str, path: str = "payload"):
    if name not in payload:
        raise SchemaViolation(f"{path}.{name}", "missing")
    return payload[name]


def _check_str(value, path: str, allow_empty: bool = False) -> str:
    if not isinstance(value, str) or (not allow_empty and not value):
        raise SchemaViolation(path, "must be a non-empty string")
    return value


def _check_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(path, "must be an integer")
    if minimum is not None and value < minimum:
        raise SchemaViolation(path, f"must be >= {minimum}")
    return value


def _check_vec(value, path: str, length: int) -> list[float]:
    if not isinstance(value, list) or len(value) != length:
        raise SchemaViolation(path, f"must be a list of {length} numbers")
    out = []
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchemaViolation(f"{path}[{i}]", "must be a number")
        if not math.isfinite(x):
            raise SchemaViolation(f"{path}[{i}]", "must be finite")
        out.append(float(x))
    return out


def _validate_pose_update(payload: dict) -> None:
    _check_str(_need(payload, "device_id"), "payload.device_id")
    role = _check_str(_need(payload, "role"), "payload.role")
    if role not in ROLES:
        raise SchemaViolation("payload.role", f"unknown role {role!r}")
    _check_int(_need(payload, "timestamp_us"), "payload.timestamp_us", minimum=0)
    _check_vec(_need(payload, "position"), "payload.position", 3)
    q = _check_vec(_need(payload, "orientation"), "payload.orientation", 4)
    n = math.sqrt(sum(c * c for c in q))
    if abs(n - 1.0) > 1e-6:
        raise SchemaViolation("payload.orientation", f"quaternion norm {n} not unit")


def _validate_command(payload: dict) -> None:
    _check_str(_need(payload, "name"), "payload.name")
    args = payload.get("args", {})
    if not isinstance(args, dict):
        raise SchemaViolation("payload.args", "must be an object")


def _validate_snapshot(payload: dict) -> None:
    _check_int(_need(payload, "frame_id"), "payload.frame_id", minimum=0)
    _check_int(_need(payload, "now_us"), "payload.now_us", minimum=0)
    display = _need(payload, "display")
    if not isinstance(display, dict):
        raise SchemaViolation("payload.display", "must be an object")
    for side in ("front", "back"):
        if side not in display:
            raise SchemaViolation(f"payload.display.{side}", "missing")


def _validate_event(payload: dict) -> None:
    _check_str(_need(payload, "name"), "payload.name")
    _check_int(_need(payload, "at_us"), "payload.at_us", minimum=0)
    data = payload.get("data", {})
    if not isinstance(data, dict):
        raise SchemaViolation("payload.data", "must be an object")


def _validate_hello(payload: dict) -> None:
    _check_int(_need(payload, "version"), "payload.version", minimum=0)


def _validate_error(payload: dict) -> None:
    _check_str(_need(payload, "code"), "payload.code")
    _check_str(_need(payload, "message"), "payload.message", allow_empty=True)


_VALIDATORS = {
    "pose_update": _validate_pose_update,
    "command": _validate_command,
    "state_snapshot": _validate_snapshot,
    "event": _validate_event,
    "hello": _validate_hello,
    "error": _validate_error,
}


# -- convenience constructors ---------------------------------------------------


def pose_update_msg(seq: int, pose) -> Message:
    return Message("pose_update", seq, {
        "device_id": pose.device_id,
        "role": pose.role,
        "timestamp_us": pose.timestamp_us,
        "position": pose.position.as_list(),
        "orientation": list(pose.orientation),
    })


def command_msg(seq: int, name: str, args: dict | None = None, at_us: int | None = None) -> Message:
    payload: dict[str, Any] = {"name": name, "args": args or {}}
    if at_us is not None:
        payload["at_us"] = at_us  # script timing; ignored by decode as unknown
    return Message("command", seq, payload)


def event_msg(seq: int, name: str, at_us: int, data: dict | None = None) -> Message:
    return Message("event", seq, {"name": name, "at_us": at_us, "data": data or {}})


def hello_msg(seq: int, version: int = PROTOCOL_VERSION, **extra) -> Message:
    payload = {"version": version}
    payload.update(extra)
    return Message("hello", seq, payload)


def error_msg(seq: int, code: str, message: str, context: dict | None = None) -> Message:
    payload: dict[str, Any] = {"code": code, "message": message}
    if context:
        payload["context"] = context
    return Message("error", seq, payload)
