"""Engine configuration: one JSON file drives screen geometry, viewer spots,
physics, technique parameters, tracking, tick rate, networking, and the
session seed. Validation reports the exact field path that failed."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid
from .geometry import BACK, FRONT, ScreenGeometry, Vec3, Viewer
from .techniques import PhysicsConfig, PlayVolume
from .tracking import SkeletonConfig, TriggerRule

DEFAULT_PORT = 7340
DEFAULT_TICK_HZ = 60.0


@dataclass(frozen=True)
class BoardConfig:
    clip_margin: float = 0.05
    praise_radius: float = 0.3


@dataclass(frozen=True)
class ExtrusionConfig:
    cols: int = 64
    rows: int = 48
    max_depth: float = 0.5
    hysteresis: float = 0.01


@dataclass(frozen=True)
class TrackingConfig:
    smoothing_alpha: float = 0.6
    history_len: int = 32
    skeleton: SkeletonConfig = field(default_factory=SkeletonConfig)
    calibrate_from_first_frame: bool = False
    triggers: tuple[TriggerRule, ...] = (
        TriggerRule("hands_up", "wrists_above_head", margin_m=0.1),
    )


@dataclass(frozen=True)
class EngineConfig:
    screen: ScreenGeometry = field(default_factory=ScreenGeometry)
    front_eye: Vec3 = Vec3(0.0, 1.2, 5.0)
    back_eye: Vec3 = Vec3(0.0, 1.6, -2.0)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    extrusion: ExtrusionConfig = field(default_factory=ExtrusionConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    board: BoardConfig = field(default_factory=BoardConfig)
    paddle_radius: float = 0.25
    tick_rate_hz: float = DEFAULT_TICK_HZ
    port: int = DEFAULT_PORT
    seed: int = 0
    deck_path: str = ""

    def viewers(self) -> dict[str, Viewer]:
        return {FRONT: Viewer(self.front_eye, FRONT), BACK: Viewer(self.back_eye, BACK)}


class _Ctx:
    """Tracks the field path while walking the config tree."""

    def __init__(self, data: dict, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigInvalid(path or "<root>", "must be an object")
        self.data = data
        self.path = path

    def _p(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def check_known(self, known: set[str]) -> None:
        for key in self.data:
            if key not in known:
                raise ConfigInvalid(self._p(key), "unknown field")

    def sub(self, name: str) -> "_Ctx":
        return _Ctx(self.data.get(name, {}), self._p(name))

    def number(self, name: str, default: float, positive=False, nonneg=False) -> float:
        v = self.data.get(name, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigInvalid(self._p(name), "must be a finite number")
        if positive and v <= 0:
            raise ConfigInvalid(self._p(name), "must be positive")
        if nonneg and v < 0:
            raise ConfigInvalid(self._p(name), "must be non-negative")
        return float(v)

    def integer(self, name: str, default: int, positive=False, nonneg=False) -> int:
        v = self.data.get(name, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigInvalid(self._p(name), "must be an integer")
        if positive and v <= 0:
            raise ConfigInvalid(self._p(name), "must be positive")
        if nonneg and v < 0:
            raise ConfigInvalid(self._p(name), "must be non-negative")
        return v

    def boolean(self, name: str, default: bool) -> bool:
        v = self.data.get(name, default)
        if not isinstance(v, bool):
            raise ConfigInvalid(self._p(name), "must be a boolean")
        return v

    def string(self, name: str, default: str) -> str:
        v = self.data.get(name, default)
        if not isinstance(v, str):
            raise ConfigInvalid(self._p(name), "must be a string")
        return v

    def vec3(self, name: str, default: Vec3) -> Vec3:
        v = self.data.get(name)
        if v is None:
            return default
        if not isinstance(v, list) or len(v) != 3:
            raise ConfigInvalid(self._p(name), "must be [x, y, z]")
        for i, c in enumerate(v):
            if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
                raise ConfigInvalid(f"{self._p(name)}[{i}]", "must be a finite number")
        return Vec3(float(v[0]), float(v[1]), float(v[2]))


def parse_config(data: dict) -> EngineConfig:
    root = _Ctx(data)
    root.check_known({"screen", "viewers", "physics", "extrusion", "tracking",
                      "board", "paddle_radius", "tick_rate_hz", "port", "seed", "deck"})

    screen_ctx = root.sub("screen")
    screen_ctx.check_known({"width", "height"})
    screen = ScreenGeometry(
        width=screen_ctx.number("width", 4.0, positive=True),
        height=screen_ctx.number("height", 3.0, positive=True),
    )

    viewers_ctx = root.sub("viewers")
    viewers_ctx.check_known({"front_eye", "back_eye"})
    front_eye = viewers_ctx.vec3("front_eye", Vec3(0.0, 1.2, 5.0))
    back_eye = viewers_ctx.vec3("back_eye", Vec3(0.0, 1.6, -2.0))
    if front_eye.z <= 0:
        raise ConfigInvalid("viewers.front_eye[2]", "front eye must have z > 0")
    if back_eye.z >= 0:
        raise ConfigInvalid("viewers.back_eye[2]", "back eye must have z < 0")

    phys_ctx = root.sub("physics")
    phys_ctx.check_known({"gravity", "dt", "play_volume", "contact_threshold",
                          "restitution", "contact_cooldown_ms", "velocity_window_ms"})
    vol_ctx = phys_ctx.sub("play_volume")
    vol_ctx.check_known({"min", "max"})
    lo = vol_ctx.vec3("min", Vec3(-5.0, -3.2, -6.0))
    hi = vol_ctx.vec3("max", Vec3(5.0, 4.0, 8.0))
    if not (lo.x < hi.x and lo.y < hi.y and lo.z < hi.z):
        raise ConfigInvalid("physics.play_volume", "min must be below max on every axis")
    physics = PhysicsConfig(
        gravity=phys_ctx.vec3("gravity", Vec3(0.0, -9.81, 0.0)),
        dt=phys_ctx.number("dt", 1.0 / 240.0, positive=True),
        play_volume=PlayVolume(lo, hi),
        contact_threshold=phys_ctx.number("contact_threshold", 0.05, positive=True),
        restitution=phys_ctx.number("restitution", 0.8, nonneg=True),
        contact_cooldown_us=int(phys_ctx.number("contact_cooldown_ms", 500.0, nonneg=True) * 1000),
        velocity_window_us=int(phys_ctx.number("velocity_window_ms", 100.0, positive=True) * 1000),
    )

    ext_ctx = root.sub("extrusion")
    ext_ctx.check_known({"cols", "rows", "max_depth", "hysteresis"})
    extrusion = ExtrusionConfig(
        cols=ext_ctx.integer("cols", 64, positive=True),
        rows=ext_ctx.integer("rows", 48, positive=True),
        max_depth=ext_ctx.number("max_depth", 0.5, positive=True),
        hysteresis=ext_ctx.number("hysteresis", 0.01, nonneg=True),
    )

    tr_ctx = root.sub("tracking")
    tr_ctx.check_known({"smoothing_alpha", "history_len", "staleness_ms",
                        "skeleton", "calibrate_from_first_frame", "triggers"})
    alpha = tr_ctx.number("smoothing_alpha", 0.6, positive=True)
    if alpha > 1.0:
        raise ConfigInvalid("tracking.smoothing_alpha", "must be in (0, 1]")
    sk_ctx = tr_ctx.sub("skeleton")
    sk_ctx.check_known({"upper_arm", "forearm", "thigh", "shin",
                        "shoulder_half", "hip_half", "neck_fraction", "spine_fraction"})
    skeleton = SkeletonConfig(
        upper_arm=sk_ctx.number("upper_arm", 0.30, positive=True),
        forearm=sk_ctx.number("forearm", 0.30, positive=True),
        thigh=sk_ctx.number("thigh", 0.45, positive=True),
        shin=sk_ctx.number("shin", 0.45, positive=True),
        shoulder_half=sk_ctx.number("shoulder_half", 0.20, positive=True),
        hip_half=sk_ctx.number("hip_half", 0.12, positive=True),
        neck_fraction=sk_ctx.number("neck_fraction", 0.85, positive=True),
        spine_fraction=sk_ctx.number("spine_fraction", 0.50, positive=True),
        staleness_us=int(tr_ctx.number("staleness_ms", 200.0, positive=True) * 1000),
    )
    triggers = []
    raw_triggers = tr_ctx.data.get("triggers")
    if raw_triggers is None:
        triggers = list(TrackingConfig().triggers)
    else:
        if not isinstance(raw_triggers, list):
            raise ConfigInvalid("tracking.triggers", "must be a list")
        for i, raw in enumerate(raw_triggers):
            t_ctx = _Ctx(raw, f"tracking.triggers[{i}]")
            t_ctx.check_known({"name", "kind", "margin_m", "min_m", "max_height_m"})
            name = t_ctx.string("name", "")
            kind = t_ctx.string("kind", "")
            if not name:
                raise ConfigInvalid(f"tracking.triggers[{i}].name", "missing")
            if kind not in TriggerRule.KINDS:
                raise ConfigInvalid(f"tracking.triggers[{i}].kind",
                                    f"must be one of {TriggerRule.KINDS}")
            triggers.append(TriggerRule(
                name=name, kind=kind,
                margin_m=t_ctx.number("margin_m", 0.1),
                min_m=t_ctx.number("min_m", 1.2),
                max_height_m=t_ctx.number("max_height_m", 1.0),
            ))
    tracking = TrackingConfig(
        smoothing_alpha=alpha,
        history_len=tr_ctx.integer("history_len", 32, positive=True),
        skeleton=skeleton,
        calibrate_from_first_frame=tr_ctx.boolean("calibrate_from_first_frame", False),
        triggers=tuple(triggers),
    )

    board_ctx = root.sub("board")
    board_ctx.check_known({"clip_margin", "praise_radius"})
    board = BoardConfig(
        clip_margin=board_ctx.number("clip_margin", 0.05, nonneg=True),
        praise_radius=board_ctx.number("praise_radius", 0.3, positive=True),
    )

    return EngineConfig(
        screen=screen,
        front_eye=front_eye,
        back_eye=back_eye,
        physics=physics,
        extrusion=extrusion,
        tracking=tracking,
        board=board,
        paddle_radius=root.number("paddle_radius", 0.25, positive=True),
        tick_rate_hz=root.number("tick_rate_hz", DEFAULT_TICK_HZ, positive=True),
        port=root.integer("port", DEFAULT_PORT, nonneg=True),  # 0 = ephemeral
        seed=root.integer("seed", 0, nonneg=True),
        deck_path=root.string("deck", ""),
    )


def load_config(path: str | Path | None) -> EngineConfig:
    """Load and validate a config file; None gives pure defaults."""
    if path is None:
        return EngineConfig()
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(str(p), "file not found") from None
    except json.JSONDecodeError as e:
        raise ConfigInvalid(str(p), f"invalid JSON: {e}") from None
    return parse_config(data)
