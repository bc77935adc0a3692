"""Coordinate frames, the screen plane, and viewer-dependent projection.

Classroom frame convention (fixed for the whole engine): origin at the screen
center, y up, z toward the audience. The screen occupies the plane z = 0; the
audience half-space is z > 0 ("front"), the presenter stage is z < 0 ("back").
On-plane coordinates (u, v) are meters with u = x (rightward as seen from the
front) and v = y (upward).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateProjection

EPS_DEPTH = 1e-6  # meters; far below tracker noise

FRONT = "front"
BACK = "back"
SIDES = (FRONT, BACK)


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, o: "Vec3") -> float:
        return self.x * o.x + self.y * o.y + self.z * o.z

    def cross(self, o: "Vec3") -> "Vec3":
        return Vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero vector")
        return self.scale(1.0 / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    @staticmethod
    def from_seq(seq) -> "Vec3":
        x, y, z = seq
        return Vec3(float(x), float(y), float(z))


@dataclass(frozen=True)
class ScreenGeometry:
    """The board plane: a width x height rectangle centered at the origin in
    the z = 0 plane."""

    width: float = 4.0
    height: float = 3.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("screen dimensions must be positive")

    def contains(self, u: float, v: float) -> bool:
        return abs(u) <= self.width / 2 and abs(v) <= self.height / 2


@dataclass(frozen=True)
class ScreenPoint:
    """A point on the board plane. Off-screen points are representable and
    carry ``on_screen=False``."""

    u: float
    v: float
    on_screen: bool = True


@dataclass(frozen=True)
class Viewer:
    """A fixed eye position for one side of the board.

    The engine renders for one configured "best spot" per side rather than per
    person; rendering stays viewer-dependent but the math is evaluated once.
    """

    eye: Vec3
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        if self.eye.z == 0.0:
            raise ValueError("viewer eye must be off the screen plane")
        expected = FRONT if self.eye.z > 0 else BACK
        if self.side != expected:
            raise ValueError(f"side {self.side!r} inconsistent with eye.z={self.eye.z}")


def project_point(viewer: Viewer, p: Vec3, screen: ScreenGeometry) -> ScreenPoint:
    """Intersect the ray eye -> p with the board plane z = 0.

    Returns S = eye + t * (p - eye) with t = eye.z / (eye.z - p.z), expressed
    as on-plane (u, v) plus an on-screen flag.

    Raises DegenerateProjection when the eye and the point are (nearly) at the
    same depth, where the ray runs parallel to the plane.
    """
    eye = viewer.eye
    denom = eye.z - p.z
    if abs(denom) <= EPS_DEPTH:
        raise DegenerateProjection(f"eye depth {eye.z} too close to point depth {p.z}")
    t = eye.z / denom
    u = eye.x + t * (p.x - eye.x)
    v = eye.y + t * (p.y - eye.y)
    if not (math.isfinite(t) and math.isfinite(u) and math.isfinite(v)):
        raise DegenerateProjection("non-finite intersection")
    return ScreenPoint(u, v, screen.contains(u, v))


def projection_scale(viewer: Viewer, p: Vec3) -> float:
    """Similar-triangles size factor at depth p.z: a segment of world length s
    parallel to the plane projects to length s * t."""
    denom = viewer.eye.z - p.z
    if abs(denom) <= EPS_DEPTH:
        raise DegenerateProjection(f"eye depth {viewer.eye.z} too close to point depth {p.z}")
    return viewer.eye.z / denom


def mirror_u(sp: ScreenPoint) -> ScreenPoint:
    """Flip a screen point across the vertical axis: (u, v) -> (-u, v).

    This is how back-authored writing is presented to the front audience so it
    reads correctly from both sides. Involution; preserves the on-screen flag.
    """
    return ScreenPoint(-sp.u, sp.v, sp.on_screen)


DEFAULT_FRONT_EYE = Vec3(0.0, 1.2, 5.0)
DEFAULT_BACK_EYE = Vec3(0.0, 1.6, -2.0)


def default_viewer(
    side: str,
    screen: ScreenGeometry,
    front_eye: Vec3 = DEFAULT_FRONT_EYE,
    back_eye: Vec3 = DEFAULT_BACK_EYE,
) -> Viewer:
    """The configured best-spot viewer for a side.

    The coordinates are configuration, not constants of the method; callers
    normally pass the eyes from EngineConfig.
    """
    if side == FRONT:
        return Viewer(front_eye, FRONT)
    if side == BACK:
        return Viewer(back_eye, BACK)
    raise ValueError(f"side must be one of {SIDES}")


def side_of(z: float) -> str:
    return FRONT if z > 0 else BACK
