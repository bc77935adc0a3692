"""The session: queued inputs, the fixed-rate tick, and snapshot assembly.

Exactly one tick loop mutates session state (single writer). Connection
handlers only enqueue decoded messages; per-input problems surface as error
events in the output stream, never as tick failures, so a bad client cannot
stall the board.
"""

from __future__ import annotations

import queue
import time
from collections import deque
from dataclasses import dataclass, field

from .board import (
    Board,
    ComposeError,
    DisplayList,
    SlideDeck,
    StudentInfo,
    compose_display_lists,
)
from .config import EngineConfig
from .errors import GlassboardError, NotInWritingMode
from .geometry import BACK, FRONT, ScreenPoint, Vec3, Viewer
from .protocol import Message, encode, event_msg
from .techniques import (
    ExtrusionField,
    IN_PLAY,
    Paddle,
    VirtualBall,
    detect_screen_contact,
    extrude,
    handoff_physical_to_virtual,
    paddle_hit,
    step_ballistic,
)
from .tracking import (
    BALL,
    BODY_ROLES,
    Pose,
    calibrate_skeleton,
    detect_pose_triggers,
    solve_skeleton,
)


@dataclass
class SessionClock:
    """Monotonic session time anchored to a wall-clock epoch."""

    epoch_wall: float = field(default_factory=time.time)
    _start_mono: float = field(default_factory=time.monotonic)
    _last_us: int = 0

    def now_us(self) -> int:
        now = int((time.monotonic() - self._start_mono) * 1_000_000)
        if now < self._last_us:
            now = self._last_us
        self._last_us = now
        return now


@dataclass(frozen=True)
class TickResult:
    snapshot: Message
    events: tuple[Message, ...]


def _empty_deck() -> SlideDeck:
    return SlideDeck(slides=((),))


class Session:
    def __init__(self, config: EngineConfig, deck: SlideDeck | None = None):
        self.config = config
        self.viewers = config.viewers()
        self.board = Board(config.screen, deck or _empty_deck(),
                           clip_margin=config.board.clip_margin)
        self.extrusion = ExtrusionField(
            config.screen,
            cols=config.extrusion.cols, rows=config.extrusion.rows,
            max_extrusion=config.extrusion.max_depth,
            hysteresis=config.extrusion.hysteresis,
        )
        self.skeleton = config.tracking.skeleton
        self._calibrated = not config.tracking.calibrate_from_first_frame
        self.histories: dict[str, deque[Pose]] = {}
        self.latest_by_role: dict[str, Pose] = {}
        self.balls: list[VirtualBall] = []
        self.paddles: dict[str, float] = {}  # device_id -> radius
        self.modeling_active = False
        self.write_sides: dict[str, str] = {}
        self.last_contact_us: int | None = None
        self.active_triggers: frozenset[str] = frozenset()
        self.frame_id = 0
        self.phys_time_us = 0
        self._dt_us = max(1, int(round(config.physics.dt * 1_000_000)))
        self.inbox: queue.SimpleQueue[Message] = queue.SimpleQueue()
        self.event_log: list[bytes] = []
        self._out_seq = 0
        self._pending_events: list[Message] = []

    # -- input ----------------------------------------------------------------

    def submit(self, msg: Message) -> None:
        """Thread-safe enqueue; processed in arrival order on the next tick."""
        self.inbox.put(msg)

    # -- event plumbing ---------------------------------------------------------

    def _next_seq(self) -> int:
        self._out_seq += 1
        return self._out_seq

    def _emit(self, name: str, at_us: int, data: dict | None = None) -> None:
        msg = event_msg(self._next_seq(), name, at_us, data)
        self._pending_events.append(msg)
        self.event_log.append(encode(msg))

    def external_event(self, name: str, at_us: int, data: dict | None = None) -> None:
        """Events raised outside the tick (connection lifecycle, seq gaps)."""
        self._emit(name, at_us, data)

    # -- input handling -----------------------------------------------------------

    def _handle_pose(self, msg: Message, now_us: int) -> None:
        p = msg.payload
        pose = Pose(
            device_id=p["device_id"], role=p["role"], timestamp_us=p["timestamp_us"],
            position=Vec3.from_seq(p["position"]),
            orientation=tuple(float(c) for c in p["orientation"]),
        )
        hist = self.histories.setdefault(
            pose.device_id, deque(maxlen=self.config.tracking.history_len))
        if hist and pose.timestamp_us < hist[-1].timestamp_us:
            self._emit("input_rejected", now_us, {
                "reason": "timestamp_regression", "device_id": pose.device_id,
                "timestamp_us": pose.timestamp_us})
            return
        hist.append(pose)
        prior = self.latest_by_role.get(pose.role)
        if prior is None or pose.timestamp_us >= prior.timestamp_us:
            self.latest_by_role[pose.role] = pose

        if pose.device_id in self.board.writing_devices:
            try:
                self.board.add_stroke_point(pose)
            except NotInWritingMode:
                pass
        if self.modeling_active and pose.role in ("left_hand", "right_hand"):
            extrude(self.extrusion, pose, modeling_active=True)

    def _handle_command(self, msg: Message, now_us: int) -> None:
        name = msg.payload["name"]
        args = msg.payload.get("args", {})
        try:
            self._apply_command(name, args, now_us)
        except GlassboardError as e:
            self._emit("command_rejected", now_us, {"command": name, "error": str(e)})
        except (KeyError, TypeError, ValueError) as e:
            self._emit("command_rejected", now_us, {"command": name, "error": str(e)})

    def _apply_command(self, name: str, args: dict, now_us: int) -> None:
        board = self.board
        if name in ("next_slide", "prev_slide"):
            hit = board.navigate("next" if name == "next_slide" else "previous")
            if hit is not None:
                self._emit("boundary_hit", now_us,
                           {"index": hit.index, "direction": hit.direction})
            else:
                self._emit("slide_changed", now_us, {"index": board.deck.current_index})
        elif name == "set_write":
            device = str(args["device_id"])
            on = bool(args.get("on", True))
            side = str(args.get("side", BACK))
            if side not in (FRONT, BACK):
                raise ValueError(f"side must be front|back, got {side!r}")
            board.set_writing(device, on, side)
        elif name == "set_role_play":
            board.set_role_play(bool(args.get("on", True)))
            if not board.role_play_active:
                self.active_triggers = frozenset()
        elif name == "freeze_afterimage":
            board.freeze_afterimage()
            self._emit("afterimage_frozen", now_us,
                       {"count": len(board.afterimages)})
        elif name == "set_modeling":
            self.modeling_active = bool(args.get("on", True))
        elif name == "reset_model":
            self.extrusion.reset()
        elif name == "praise":
            click = ScreenPoint(float(args["u"]), float(args["v"]))
            ev = board.apply_praise(click, self.config.board.praise_radius, now_us)
            if ev is not None:
                self._emit("praise_given", now_us, {
                    "student_id": ev.student_id,
                    "praise_count": board.praise_counts[ev.student_id]})
        elif name == "throw_ball":
            direction = Vec3.from_seq(args["direction"])
            speed = float(args["speed"])
            origin = Vec3.from_seq(args.get("from", [0.0, 1.0, 0.0]))
            vel = direction.normalized().scale(speed)
            self.balls.append(VirtualBall(origin, vel))
            self._emit("ball_spawned", now_us, {"source": "command"})
        elif name == "move_viewer":
            side = str(args["side"])
            eye = Vec3.from_seq(args["eye"])
            self.viewers[side] = Viewer(eye, side)  # validates side consistency
        elif name == "set_students":
            students = []
            for raw in args.get("students", []):
                students.append(StudentInfo(
                    id=str(raw["id"]), name=str(raw.get("name", raw["id"])),
                    head_pos=Vec3.from_seq(raw["head_pos"]),
                    metrics={str(k): float(v) for k, v in raw.get("metrics", {}).items()},
                ))
            board.update_dashboard(students, self.viewers[BACK])
        elif name == "set_paddle":
            device = str(args["device_id"])
            if bool(args.get("on", True)):
                self.paddles[device] = float(args.get("radius", self.config.paddle_radius))
            else:
                self.paddles.pop(device, None)
        elif name == "add_placeholder":
            board.media_placeholders.append(str(args.get("ref", "telepresence")))
        else:
            raise ValueError(f"unknown command {name!r}")

    # -- subsystems ----------------------------------------------------------------

    def _step_physics(self, now_us: int) -> None:
        if self.phys_time_us == 0:
            self.phys_time_us = now_us  # anchor on first tick
            return
        cfg = self.config.physics
        while self.phys_time_us + self._dt_us <= now_us:
            self.phys_time_us += self._dt_us
            if not self.balls:
                continue
            stepped = []
            for ball in self.balls:
                b = step_ballistic(ball, cfg)
                for device_id, radius in sorted(self.paddles.items()):
                    hist = self.histories.get(device_id)
                    if not hist:
                        continue
                    before = b.velocity
                    b = paddle_hit(b, Paddle(hist[-1], radius), cfg)
                    if b.velocity != before:
                        self._emit("paddle_hit", self.phys_time_us,
                                   {"device_id": device_id, "owner_side": b.owner_side})
                stepped.append(b)
            self.balls = [b for b in stepped if b.state == IN_PLAY]
            for b in stepped:
                if b.state != IN_PLAY:
                    self._emit("ball_out_of_bounds", self.phys_time_us, {})

    def _detect_handoffs(self, now_us: int) -> None:
        cfg = self.config.physics
        for device_id, hist in sorted(self.histories.items()):
            if not hist or hist[-1].role != BALL:
                continue
            contact = detect_screen_contact(
                list(hist), cfg, self.config.screen, self.last_contact_us)
            if contact is None:
                continue
            self.last_contact_us = contact.timestamp_us
            self._emit("screen_contact", now_us, {
                "u": contact.point.u, "v": contact.point.v,
                "from_side": contact.from_side,
                "velocity": contact.velocity.as_list()})
            self.balls.append(handoff_physical_to_virtual(contact, cfg))
            self._emit("ball_spawned", now_us, {"source": "handoff"})

    def _update_avatar(self, now_us: int) -> None:
        board = self.board
        if not board.role_play_active:
            return
        poses = {}
        for role in BODY_ROLES:
            pose = self.latest_by_role.get(role)
            if pose is not None:
                poses[role] = pose
        if len(poses) < len(BODY_ROLES):
            return  # keep the previous avatar until all trackers report
        newest = max(p.timestamp_us for p in poses.values())
        if any(newest - p.timestamp_us > self.skeleton.staleness_us for p in poses.values()):
            return
        if not self._calibrated:
            self.skeleton = calibrate_skeleton(poses, self.skeleton)
            self._calibrated = True
        avatar = solve_skeleton(poses, self.skeleton, now_us=newest)
        triggers = frozenset(detect_pose_triggers(avatar, self.config.tracking.triggers))
        board.avatar = avatar.with_triggers(triggers)
        if triggers != self.active_triggers:
            self._emit("triggers_changed", now_us, {"active": sorted(triggers)})
            self.active_triggers = triggers

    # -- the tick ----------------------------------------------------------------------

    def tick(self, now_us: int) -> TickResult:
        """Apply queued inputs in arrival order, advance physics to now,
        recompose both display lists, and assemble the snapshot."""
        while True:
            try:
                msg = self.inbox.get_nowait()
            except queue.Empty:
                break
            if msg.type == "pose_update":
                self._handle_pose(msg, now_us)
            elif msg.type == "command":
                self._handle_command(msg, now_us)
            elif msg.type == "event":
                # connection-level observations (seq gaps etc.) re-emitted
                # under the session's own sequence numbering
                self._emit(msg.payload["name"], now_us, msg.payload.get("data", {}))
            # hello/error inputs carry no session state

        self._step_physics(now_us)
        self._detect_handoffs(now_us)
        self._update_avatar(now_us)
        if self.board.students:
            self.board.update_dashboard(self.board.students, self.viewers[BACK])

        self.board.set_objects([
            {"ref": "ball", "position": b.position, "size": 0.2} for b in self.balls
        ])
        nz = self.extrusion.summary()
        self.board.set_extrusion_summary(nz if nz["cells_nonzero"] else None)

        self.frame_id += 1
        try:
            lists = compose_display_lists(self.board, self.viewers, self.frame_id)
        except ComposeError as e:
            # authored content sitting exactly at a viewer depth: report it,
            # blank the frame, keep the session alive
            self._emit("compose_error", now_us, {"layer": e.layer_id, "error": str(e)})
            lists = {
                FRONT: DisplayList(FRONT, self.frame_id, ()),
                BACK: DisplayList(BACK, self.frame_id, ()),
            }

        snapshot = Message("state_snapshot", self._next_seq(), {
            "frame_id": self.frame_id,
            "now_us": now_us,
            "slide_index": self.board.deck.current_index,
            "slide_count": len(self.board.deck.slides),
            "display": {
                FRONT: lists[FRONT].to_payload(),
                BACK: lists[BACK].to_payload(),
            },
            "balls": [
                {"position": b.position.as_list(), "velocity": b.velocity.as_list(),
                 "state": b.state, "owner_side": b.owner_side}
                for b in self.balls
            ],
            "avatar": self._avatar_payload(),
            "modes": {
                "role_play": self.board.role_play_active,
                "modeling": self.modeling_active,
                "writing": sorted(self.board.writing_devices),
            },
            "students": [
                {"id": s.id, "name": s.name,
                 "praise_count": self.board.praise_counts.get(s.id, 0)}
                for s in self.board.students
            ],
            "extrusion": self.board.extrusion_summary,
        })
        events = tuple(self._pending_events)
        self._pending_events = []
        return TickResult(snapshot, events)

    def _avatar_payload(self):
        avatar = self.board.avatar
        if avatar is None or not self.board.role_play_active:
            return None
        return {
            "joints": {name: j.as_list() for name, j in sorted(avatar.joints.items())},
            "triggers": sorted(avatar.trigger_state),
        }

    def frame_digests(self, lists) -> dict[str, str]:
        return {side: dl.digest() for side, dl in lists.items()}
