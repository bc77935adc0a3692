"""The board's retained scene and the per-tick double-sided render pass.

Every tick the scene (slide deck, stroke layers, avatar and afterimage layers,
dashboard tags, virtual objects) is projected twice, once per side viewer,
into two ordered 2D display lists. Back-authored writing appears mirrored and
in the conspicuous color on the front list so both audiences read it
correctly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .errors import DegenerateProjection, NotInWritingMode, RolePlayInactive
from .geometry import (
    BACK,
    FRONT,
    ScreenGeometry,
    ScreenPoint,
    Vec3,
    Viewer,
    mirror_u,
    project_point,
    projection_scale,
)
from .tracking import AvatarPose

LAYER_KINDS = ("slide", "stroke", "avatar", "afterimage", "tag", "object", "media_placeholder")

# paper-gap defaults: the system shows faint originals to the author and a
# saturated counterpart to the opposite audience, but names no colors
INCONSPICUOUS = (0.25, 0.25, 0.25, 1.0)  # 25% gray
CONSPICUOUS = (1.0, 0.9, 0.0, 1.0)       # saturated yellow

AFTERIMAGE_DECAY = 0.7
AFTERIMAGE_FLOOR = 0.15

BONES = (
    ("pelvis", "spine"), ("spine", "head"),
    ("spine", "left_shoulder"), ("spine", "right_shoulder"),
    ("left_shoulder", "left_elbow"), ("left_elbow", "left_wrist"),
    ("right_shoulder", "right_elbow"), ("right_elbow", "right_wrist"),
    ("pelvis", "left_hip"), ("left_hip", "left_knee"), ("left_knee", "left_ankle"),
    ("pelvis", "right_hip"), ("right_hip", "right_knee"), ("right_knee", "right_ankle"),
)


@dataclass(frozen=True)
class SlideItem:
    """One 3D-placed content item; decks are authored in classroom coordinates
    so content can pop out of or recess behind the plane."""

    kind: str  # "text" | "sprite"
    position: Vec3
    size: tuple[float, float] = (0.5, 0.5)
    text: str = ""
    sprite: str = ""

    def __post_init__(self):
        if self.kind not in ("text", "sprite"):
            raise ValueError(f"unknown slide item kind {self.kind!r}")


@dataclass(frozen=True)
class SlideDeck:
    slides: tuple[tuple[SlideItem, ...], ...]
    current_index: int = 0

    def __post_init__(self):
        if not self.slides:
            raise ValueError("deck needs at least one slide")
        if not (0 <= self.current_index < len(self.slides)):
            raise ValueError("current_index out of range")

    @property
    def current(self) -> tuple[SlideItem, ...]:
        return self.slides[self.current_index]


@dataclass(frozen=True)
class BoundaryHit:
    """Emitted when navigation clamps at either end of the deck."""

    index: int
    direction: str


def navigate(deck: SlideDeck, direction: str) -> tuple[SlideDeck, BoundaryHit | None]:
    """Move one slide forward or back, clamping at the ends."""
    if direction not in ("next", "previous"):
        raise ValueError(f"direction must be next|previous, got {direction!r}")
    delta = 1 if direction == "next" else -1
    idx = deck.current_index + delta
    if idx < 0 or idx >= len(deck.slides):
        return deck, BoundaryHit(deck.current_index, direction)
    return replace(deck, current_index=idx), None


def parse_deck(data: dict) -> SlideDeck:
    """Deck file schema: {"slides": [{"items": [{"kind", "position", "size",
    "text"|"sprite"}...]}...]}; positions in classroom meters."""
    if not isinstance(data, dict) or not isinstance(data.get("slides"), list) or not data["slides"]:
        raise ValueError("deck must hold a non-empty slides list")
    slides = []
    for si, slide in enumerate(data["slides"]):
        if not isinstance(slide, dict) or not isinstance(slide.get("items", []), list):
            raise ValueError(f"slides[{si}] must be an object with an items list")
        items = []
        for ii, raw in enumerate(slide.get("items", [])):
            where = f"slides[{si}].items[{ii}]"
            if not isinstance(raw, dict):
                raise ValueError(f"{where} must be an object")
            kind = raw.get("kind")
            if kind not in ("text", "sprite"):
                raise ValueError(f"{where}.kind must be text|sprite")
            pos = raw.get("position")
            if not (isinstance(pos, list) and len(pos) == 3
                    and all(isinstance(c, (int, float)) and not isinstance(c, bool)
                            and math.isfinite(c) for c in pos)):
                raise ValueError(f"{where}.position must be [x, y, z]")
            size = raw.get("size", [0.5, 0.5])
            if not (isinstance(size, list) and len(size) == 2
                    and all(isinstance(c, (int, float)) and not isinstance(c, bool)
                            and c > 0 for c in size)):
                raise ValueError(f"{where}.size must be [w, h] positive")
            items.append(SlideItem(
                kind=kind,
                position=Vec3(float(pos[0]), float(pos[1]), float(pos[2])),
                size=(float(size[0]), float(size[1])),
                text=str(raw.get("text", "")),
                sprite=str(raw.get("sprite", "")),
            ))
        slides.append(tuple(items))
    return SlideDeck(slides=tuple(slides))


def load_deck(path: str | Path) -> SlideDeck:
    return parse_deck(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class Stroke:
    points: list[ScreenPoint]
    author_side: str
    color_front: tuple[float, float, float, float]
    color_back: tuple[float, float, float, float]

    @staticmethod
    def start(author_side: str) -> "Stroke":
        if author_side == BACK:
            return Stroke([], BACK, color_front=CONSPICUOUS, color_back=INCONSPICUOUS)
        return Stroke([], FRONT, color_front=INCONSPICUOUS, color_back=CONSPICUOUS)


@dataclass
class Layer:
    id: str
    kind: str
    z_order: int
    visible_front: bool = True
    visible_back: bool = True
    payload: Any = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")


@dataclass(frozen=True)
class DisplayList:
    side: str
    frame_id: int
    primitives: tuple[dict, ...]

    def to_payload(self) -> dict:
        return {"side": self.side, "frame_id": self.frame_id,
                "primitives": list(self.primitives)}

    def digest(self) -> str:
        """Content hash of the rendered primitives; deliberately excludes
        frame_id so identical scenes hash identically across frames."""
        blob = json.dumps({"side": self.side, "primitives": list(self.primitives)},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class StudentInfo:
    id: str
    name: str
    head_pos: Vec3
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Tag:
    student_id: str
    name: str
    u: float
    v: float
    width: float
    height: float
    metrics: dict[str, float]
    praise_count: int


@dataclass(frozen=True)
class PraiseGiven:
    student_id: str
    timestamp_us: int


TAG_ANCHOR_DY = 0.25   # meters above the head
TAG_WIDTH = 0.4
TAG_HEIGHT = 0.12


class Board:
    """Retained scene state. Mutated only by the session tick (single
    writer); composing display lists reads an effectively immutable snapshot.
    """

    def __init__(self, screen: ScreenGeometry, deck: SlideDeck, clip_margin: float = 0.05):
        self.screen = screen
        self.deck = deck
        self.clip_margin = clip_margin
        self.strokes: list[Stroke] = []
        self.active_strokes: dict[str, Stroke] = {}
        self.writing_devices: set[str] = set()
        self.role_play_active = False
        self.avatar: AvatarPose | None = None
        self.afterimages: list[AvatarPose] = []  # newest last
        self.students: list[StudentInfo] = []
        self.tags: list[Tag] = []
        self.praise_counts: dict[str, int] = {}
        self.objects: list[dict] = []            # projected per side at compose
        self.extrusion_summary: dict | None = None
        self.media_placeholders: list[str] = []  # opaque layers, no pixel data

    # -- navigation ----------------------------------------------------------

    def navigate(self, direction: str) -> BoundaryHit | None:
        self.deck, hit = navigate(self.deck, direction)
        return hit

    # -- writing (scenario: writing behind the scene) -------------------------

    def set_writing(self, device_id: str, on: bool, side: str = BACK) -> None:
        if on:
            self.writing_devices.add(device_id)
            self.active_strokes[device_id] = Stroke.start(side)
        else:
            self.writing_devices.discard(device_id)
            stroke = self.active_strokes.pop(device_id, None)
            if stroke and len(stroke.points) >= 2:
                self.strokes.append(stroke)

    def add_stroke_point(self, device_pose) -> None:
        """Drop the device position orthogonally onto the plane and append it
        to the device's active stroke. Consecutive duplicates are discarded.
        """
        device_id = device_pose.device_id
        if device_id not in self.writing_devices:
            raise NotInWritingMode(f"device {device_id!r} is not writing")
        stroke = self.active_strokes[device_id]
        p = device_pose.position
        sp = ScreenPoint(p.x, p.y, self.screen.contains(p.x, p.y))
        if stroke.points and stroke.points[-1].u == sp.u and stroke.points[-1].v == sp.v:
            return
        stroke.points.append(sp)

    # -- role play & afterimage -----------------------------------------------

    def set_role_play(self, on: bool) -> None:
        self.role_play_active = on
        if not on:
            self.avatar = None

    def freeze_afterimage(self, avatar: AvatarPose | None = None) -> None:
        """Append an immutable snapshot of the current avatar pose. Snapshots
        are historical: identical poses still freeze as distinct layers."""
        if not self.role_play_active:
            raise RolePlayInactive("role-play layer is not active")
        snap = avatar if avatar is not None else self.avatar
        if snap is None:
            raise RolePlayInactive("no avatar pose to freeze")
        self.afterimages.append(snap)

    @staticmethod
    def afterimage_opacity(age_rank: int) -> float:
        """Newest snapshot is fully opaque; each older one fades by a constant
        factor down to a floor."""
        return max(AFTERIMAGE_FLOOR, AFTERIMAGE_DECAY ** age_rank)

    # -- dashboard --------------------------------------------------------------

    def update_dashboard(self, students: Sequence[StudentInfo], teacher_eye: Viewer) -> None:
        """Recompute tag billboards above each student's head for the
        teacher's viewpoint. Overlapping tags stack vertically in id order so
        tags never overlap."""
        if teacher_eye.side != BACK:
            raise ValueError("dashboard renders for the teacher on the back side")
        self.students = sorted(students, key=lambda s: s.id)
        placed: list[Tag] = []
        for s in self.students:
            anchor = Vec3(s.head_pos.x, s.head_pos.y + TAG_ANCHOR_DY, s.head_pos.z)
            sp = project_point(teacher_eye, anchor, self.screen)
            u, v = sp.u, sp.v
            while any(abs(u - t.u) < TAG_WIDTH and abs(v - t.v) < TAG_HEIGHT for t in placed):
                v += TAG_HEIGHT
            placed.append(Tag(
                student_id=s.id, name=s.name, u=u, v=v,
                width=TAG_WIDTH, height=TAG_HEIGHT,
                metrics=dict(s.metrics),
                praise_count=self.praise_counts.get(s.id, 0),
            ))
        self.tags = placed

    def apply_praise(self, screen_click: ScreenPoint, radius: float,
                     timestamp_us: int = 0) -> PraiseGiven | None:
        """Praise the nearest tag within ``radius`` of the click; ties go to
        the lower student id. Returns the logged event, or None if no tag is
        close enough."""
        best: Tag | None = None
        best_d = math.inf
        for tag in self.tags:  # ascending id order, so ties keep the lower id
            d = math.hypot(tag.u - screen_click.u, tag.v - screen_click.v)
            if d <= radius and d < best_d:
                best, best_d = tag, d
        if best is None:
            return None
        self.praise_counts[best.student_id] = self.praise_counts.get(best.student_id, 0) + 1
        self.tags = [
            replace(t, praise_count=self.praise_counts.get(t.student_id, 0)) for t in self.tags
        ]
        return PraiseGiven(best.student_id, timestamp_us)

    # -- objects ----------------------------------------------------------------

    def set_objects(self, objects: list[dict]) -> None:
        """World-space objects (virtual balls etc.) injected by the session
        each tick: [{"ref", "position": Vec3, "size"}...]."""
        self.objects = objects

    def set_extrusion_summary(self, summary: dict | None) -> None:
        self.extrusion_summary = summary


# -- composition ---------------------------------------------------------------


def _clip_value(lo: float, hi: float, x: float) -> bool:
    return lo <= x <= hi


def _clip_segment(p0: ScreenPoint, p1: ScreenPoint, half_w: float, half_h: float):
    """Liang-Barsky clip of one segment to the expanded screen rect; returns
    (u0,v0,u1,v1) or None."""
    x0, y0, x1, y1 = p0.u, p0.v, p1.u, p1.v
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x0 + half_w),
        (dx, half_w - x0),
        (-dy, y0 + half_h),
        (dy, half_h - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return None
            if r > t0:
                t0 = r
        else:
            if r < t0:
                return None
            if r < t1:
                t1 = r
    return (x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy)


def _clip_polyline(points: Sequence[ScreenPoint], half_w: float, half_h: float) -> list[list[list[float]]]:
    """Clip a polyline into zero or more runs inside the expanded rect."""
    runs: list[list[list[float]]] = []
    current: list[list[float]] = []
    for a, b in zip(points, points[1:]):
        seg = _clip_segment(a, b, half_w, half_h)
        if seg is None:
            if len(current) >= 2:
                runs.append(current)
            current = []
            continue
        u0, v0, u1, v1 = seg
        if not current:
            current = [[u0, v0]]
        elif current[-1] != [u0, v0]:
            if len(current) >= 2:
                runs.append(current)
            current = [[u0, v0]]
        current.append([u1, v1])
    if len(current) >= 2:
        runs.append(current)
    return runs


def _mirror_runs(runs: list[list[list[float]]]) -> list[list[list[float]]]:
    return [[[-u, v] for u, v in run] for run in runs]


class ComposeError(DegenerateProjection):
    def __init__(self, layer_id: str, cause: DegenerateProjection):
        super().__init__(f"layer {layer_id!r}: {cause}")
        self.layer_id = layer_id


def compose_display_lists(
    board: Board,
    viewers: dict[str, Viewer],
    frame_id: int,
) -> dict[str, DisplayList]:
    """Project the whole scene once per side.

    Deterministic: identical board state and viewers give bit-identical
    display lists including primitive order (layers by z_order, content in
    authored order). Every emitted coordinate lies within the screen extent
    plus the clip margin.
    """
    screen = board.screen
    half_w = screen.width / 2 + board.clip_margin
    half_h = screen.height / 2 + board.clip_margin
    front: list[dict] = []
    back: list[dict] = []

    def emit_slide_items():
        for i, item in enumerate(board.deck.current):
            for side, sink in ((FRONT, front), (BACK, back)):
                viewer = viewers[side]
                try:
                    sp = project_point(viewer, item.position, screen)
                    scale = projection_scale(viewer, item.position)
                except DegenerateProjection as e:
                    raise ComposeError(f"slide[{i}]", e) from e
                w = abs(item.size[0] * scale)
                h = abs(item.size[1] * scale)
                if not (_clip_value(-half_w, half_w, sp.u) and _clip_value(-half_h, half_h, sp.v)):
                    continue
                if item.kind == "text":
                    sink.append({
                        "kind": "glyph_run", "layer": "slide", "text": item.text,
                        "u": sp.u, "v": sp.v, "height": h, "width": w,
                        "color": list(CONSPICUOUS), "mirrored": False, "opacity": 1.0,
                    })
                else:
                    sink.append({
                        "kind": "sprite", "layer": "slide", "ref": item.sprite,
                        "u": sp.u, "v": sp.v, "w": w, "h": h, "opacity": 1.0,
                    })

    def emit_strokes():
        all_strokes = board.strokes + [
            s for _, s in sorted(board.active_strokes.items()) if len(s.points) >= 2
        ]
        for si, stroke in enumerate(all_strokes):
            runs = _clip_polyline(stroke.points, half_w, half_h)
            if not runs:
                continue
            mirrored = _mirror_runs(runs)
            if stroke.author_side == BACK:
                back_runs, front_runs = runs, mirrored
            else:
                front_runs, back_runs = runs, mirrored
            for run in back_runs:
                back.append({"kind": "polyline", "layer": f"stroke[{si}]",
                             "points": run, "color": list(stroke.color_back), "opacity": 1.0})
            for run in front_runs:
                front.append({"kind": "polyline", "layer": f"stroke[{si}]",
                              "points": run, "color": list(stroke.color_front), "opacity": 1.0})

    def emit_avatar(avatar: AvatarPose, layer_id: str, opacity: float):
        for side, sink in ((FRONT, front), (BACK, back)):
            viewer = viewers[side]
            for a, b in BONES:
                try:
                    pa = project_point(viewer, avatar.joints[a], screen)
                    pb = project_point(viewer, avatar.joints[b], screen)
                except DegenerateProjection:
                    continue  # bone at this viewer's depth: invisible from here
                seg = _clip_segment(pa, pb, half_w, half_h)
                if seg is None:
                    continue
                u0, v0, u1, v1 = seg
                sink.append({"kind": "polyline", "layer": layer_id,
                             "points": [[u0, v0], [u1, v1]],
                             "color": [1.0, 1.0, 1.0, 1.0], "opacity": opacity})

    def emit_tags():
        # dashboard tags exist for the teacher's (back) view only
        for tag in board.tags:
            if not (_clip_value(-half_w, half_w, tag.u) and _clip_value(-half_h, half_h, tag.v)):
                continue
            back.append({
                "kind": "tag", "layer": "dashboard", "student_id": tag.student_id,
                "name": tag.name, "u": tag.u, "v": tag.v, "w": tag.width, "h": tag.height,
                "metrics": {k: tag.metrics[k] for k in sorted(tag.metrics)},
                "praise_count": tag.praise_count,
            })

    def emit_objects():
        for i, obj in enumerate(board.objects):
            pos: Vec3 = obj["position"]
            size = obj.get("size", 0.2)
            for side, sink in ((FRONT, front), (BACK, back)):
                viewer = viewers[side]
                try:
                    sp = project_point(viewer, pos, screen)
                    scale = projection_scale(viewer, pos)
                except DegenerateProjection:
                    continue  # transient object at this viewer's depth
                if not (_clip_value(-half_w, half_w, sp.u) and _clip_value(-half_h, half_h, sp.v)):
                    continue
                sink.append({"kind": "sprite", "layer": f"object[{i}]",
                             "ref": obj.get("ref", "ball"), "u": sp.u, "v": sp.v,
                             "w": abs(size * scale), "h": abs(size * scale), "opacity": 1.0})

    def emit_extrusion():
        if board.extrusion_summary is None:
            return
        s = board.extrusion_summary
        prim = {"kind": "heightfield", "layer": "model", "u": 0.0, "v": 0.0,
                "cols": s["cols"], "rows": s["rows"],
                "cells_nonzero": s["cells_nonzero"], "max_depth": s["max_depth"],
                "hash": s["hash"]}
        front.append(dict(prim))
        back.append(dict(prim))

    def emit_placeholders():
        for i, ref in enumerate(board.media_placeholders):
            prim = {"kind": "sprite", "layer": f"media_placeholder[{i}]", "ref": ref,
                    "u": 0.0, "v": 0.0, "w": screen.width, "h": screen.height, "opacity": 1.0}
            front.append(dict(prim))
            back.append(dict(prim))

    # z order: slide(0) < media placeholders(5) < strokes(10) < afterimages(20)
    # < live avatar(30) < objects(40) < model(50) < dashboard tags(60)
    emit_slide_items()
    emit_placeholders()
    emit_strokes()
    n = len(board.afterimages)
    for idx, avatar in enumerate(board.afterimages):  # oldest drawn first
        emit_avatar(avatar, f"afterimage[{idx}]", Board.afterimage_opacity(n - 1 - idx))
    if board.role_play_active and board.avatar is not None:
        emit_avatar(board.avatar, "avatar", 1.0)
    emit_objects()
    emit_extrusion()
    emit_tags()

    return {
        FRONT: DisplayList(FRONT, frame_id, tuple(front)),
        BACK: DisplayList(BACK, frame_id, tuple(back)),
    }
