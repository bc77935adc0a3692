"""Dynamic interaction techniques: ball play, physical-to-virtual handoff,
and elastic Z-depth modeling on the board surface."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientSamples, NotInModelingMode
from .geometry import FRONT, ScreenGeometry, ScreenPoint, Vec3, side_of
from .tracking import Pose, estimate_velocity

IN_PLAY = "in_play"
OUT_OF_BOUNDS = "out_of_bounds"
ABSORBED = "absorbed"


@dataclass(frozen=True)
class PlayVolume:
    lo: Vec3 = Vec3(-5.0, -3.2, -6.0)
    hi: Vec3 = Vec3(5.0, 4.0, 8.0)

    def contains(self, p: Vec3) -> bool:
        return (self.lo.x <= p.x <= self.hi.x
                and self.lo.y <= p.y <= self.hi.y
                and self.lo.z <= p.z <= self.hi.z)


@dataclass(frozen=True)
class PhysicsConfig:
    gravity: Vec3 = Vec3(0.0, -9.81, 0.0)
    dt: float = 1.0 / 240.0           # semi-implicit Euler substep
    play_volume: PlayVolume = field(default_factory=PlayVolume)
    contact_threshold: float = 0.05   # meters from the plane
    restitution: float = 0.8
    contact_cooldown_us: int = 500_000
    velocity_window_us: int = 100_000

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.contact_threshold <= 0:
            raise ValueError("contact_threshold must be positive")


@dataclass(frozen=True)
class VirtualBall:
    position: Vec3
    velocity: Vec3
    state: str = IN_PLAY
    owner_side: str = "none"

    def __post_init__(self):
        if not (self.position.is_finite() and self.velocity.is_finite()):
            raise ValueError("ball state must be finite")


@dataclass(frozen=True)
class Paddle:
    pose: Pose
    radius: float = 0.25

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("paddle radius must be positive")


def step_ballistic(ball: VirtualBall, cfg: PhysicsConfig) -> VirtualBall:
    """One semi-implicit Euler substep: v' = v + g dt, p' = p + v' dt.

    Velocity updates before position, which keeps the integrator symplectic
    and its position error bounded by g*dt*t/2 against the exact parabola.
    """
    if ball.state != IN_PLAY:
        return ball
    v = ball.velocity + cfg.gravity.scale(cfg.dt)
    p = ball.position + v.scale(cfg.dt)
    state = IN_PLAY if cfg.play_volume.contains(p) else OUT_OF_BOUNDS
    return VirtualBall(p, v, state, ball.owner_side)


@dataclass(frozen=True)
class ScreenContact:
    point: ScreenPoint
    velocity: Vec3
    timestamp_us: int
    from_side: str


def detect_screen_contact(
    ball_history: Sequence[Pose],
    cfg: PhysicsConfig,
    screen: ScreenGeometry,
    last_contact_us: int | None = None,
) -> ScreenContact | None:
    """Detect the tracked physical ball reaching the board plane.

    Contact fires when |z| drops inside ``contact_threshold`` while the z
    velocity points at the plane from the thrower's side. The contact point is
    the (x, y) of the crossing sample; the velocity comes from a least-squares
    fit over the trailing window. At most one contact per cooldown period.
    """
    if len(ball_history) < 2:
        return None
    latest = ball_history[-1]
    prev = ball_history[-2]
    if abs(latest.position.z) > cfg.contact_threshold:
        return None
    if last_contact_us is not None and \
            latest.timestamp_us - last_contact_us < cfg.contact_cooldown_us:
        return None
    try:
        vel = estimate_velocity(ball_history, cfg.velocity_window_us).linear
    except InsufficientSamples:
        return None
    thrower_side = side_of(prev.position.z if prev.position.z != 0 else vel.z * -1.0)
    approaching = vel.z < 0 if thrower_side == FRONT else vel.z > 0
    if not approaching:
        return None
    p = latest.position
    return ScreenContact(
        point=ScreenPoint(p.x, p.y, screen.contains(p.x, p.y)),
        velocity=vel,
        timestamp_us=latest.timestamp_us,
        from_side=thrower_side,
    )


def handoff_physical_to_virtual(contact: ScreenContact, cfg: PhysicsConfig) -> VirtualBall:
    """Spawn the virtual continuation of a thrown physical ball at the plane,
    carrying the measured contact velocity."""
    return VirtualBall(
        position=Vec3(contact.point.u, contact.point.v, 0.0),
        velocity=contact.velocity,
        state=IN_PLAY,
        owner_side="none",
    )


def paddle_hit(ball: VirtualBall, paddle: Paddle, cfg: PhysicsConfig) -> VirtualBall:
    """Reflect the ball off a hand-controller paddle.

    Fires only while the ball is inside the paddle radius and the velocity
    approaches the paddle; the velocity reflects about the paddle-to-ball
    direction and scales by restitution, so with restitution <= 1 mechanical
    energy never increases.
    """
    if ball.state != IN_PLAY:
        return ball
    offset = ball.position - paddle.pose.position
    dist = offset.norm()
    if dist > paddle.radius or dist == 0.0:
        return ball
    normal = offset.scale(1.0 / dist)
    approach = ball.velocity.dot(normal)
    if approach >= 0.0:  # separating contact, no hit
        return ball
    reflected = ball.velocity - normal.scale(2.0 * approach)
    v = reflected.scale(cfg.restitution)
    return VirtualBall(ball.position, v, IN_PLAY, side_of(paddle.pose.position.z))


# -- elastic Z modeling -------------------------------------------------------


class ExtrusionField:
    """Grid over the board plane holding modeled depth (meters, + into the
    scene away from the modeler). Depths only grow (max rule) until reset."""

    def __init__(
        self,
        screen: ScreenGeometry,
        cols: int = 64,
        rows: int = 48,
        max_extrusion: float = 0.5,
        hysteresis: float = 0.01,
        modeling_side: str = FRONT,
    ):
        if cols <= 0 or rows <= 0:
            raise ValueError("grid must have positive dimensions")
        if max_extrusion <= 0:
            raise ValueError("max_extrusion must be positive")
        self.screen = screen
        self.cols = cols
        self.rows = rows
        self.max_extrusion = max_extrusion
        self.hysteresis = hysteresis
        self.modeling_side = modeling_side
        self.depth = np.zeros((rows, cols), dtype=np.float64)

    def cell_of(self, x: float, y: float) -> tuple[int, int] | None:
        w, h = self.screen.width, self.screen.height
        if abs(x) > w / 2 or abs(y) > h / 2:
            return None
        col = min(self.cols - 1, int((x + w / 2) / w * self.cols))
        row = min(self.rows - 1, int((y + h / 2) / h * self.rows))
        return row, col

    def penetration(self, controller: Pose) -> float:
        z = controller.position.z
        return max(0.0, -z) if self.modeling_side == FRONT else max(0.0, z)

    def reset(self) -> None:
        self.depth.fill(0.0)

    def content_hash(self) -> str:
        return hashlib.sha256(self.depth.tobytes()).hexdigest()

    def summary(self) -> dict:
        nz = int(np.count_nonzero(self.depth))
        return {
            "cols": self.cols,
            "rows": self.rows,
            "cells_nonzero": nz,
            "max_depth": float(self.depth.max()) if nz else 0.0,
            "hash": self.content_hash(),
        }


def extrude(field: ExtrusionField, controller: Pose, modeling_active: bool = True) -> ExtrusionField:
    """Record the controller pushing into the elastic screen.

    Penetration below the hysteresis threshold is ignored so jitter around the
    plane cannot chatter the grid. Each cell keeps its maximum depth, clamped
    to the configured limit. Mutates and returns ``field``.
    """
    if not modeling_active:
        raise NotInModelingMode("modeling mode is not active")
    d = field.penetration(controller)
    if d < field.hysteresis:
        return field
    cell = field.cell_of(controller.position.x, controller.position.y)
    if cell is None:
        return field
    row, col = cell
    clamped = min(d, field.max_extrusion)
    if clamped > field.depth[row, col]:
        field.depth[row, col] = clamped
    return field


def simulate_flight(
    ball: VirtualBall,
    cfg: PhysicsConfig,
    seconds: float,
) -> list[VirtualBall]:
    """Fixed-step trajectory of a ball over ``seconds``; handy for scripted
    replays and accuracy checks."""
    steps = int(round(seconds / cfg.dt))
    out = [ball]
    cur = ball
    for _ in range(steps):
        cur = step_ballistic(cur, cfg)
        out.append(cur)
    return out
