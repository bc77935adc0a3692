"""Pose stream model, smoothing, velocity estimation, and avatar solving.

Six body roles (head, waist, both hands, both feet) drive a stick-figure
avatar via analytic two-bone inverse kinematics; a seventh "ball" role tags a
tracker strapped to a throwable prop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyHistory, InsufficientSamples, MissingDevice, StalePose
from .geometry import Vec3

HEAD = "head"
WAIST = "waist"
LEFT_HAND = "left_hand"
RIGHT_HAND = "right_hand"
LEFT_FOOT = "left_foot"
RIGHT_FOOT = "right_foot"
BALL = "ball"

BODY_ROLES = (HEAD, WAIST, LEFT_HAND, RIGHT_HAND, LEFT_FOOT, RIGHT_FOOT)
ROLES = BODY_ROLES + (BALL,)


@dataclass(frozen=True)
class Pose:
    """One timestamped rigid transform of a tracked device."""

    device_id: str
    role: str
    timestamp_us: int
    position: Vec3
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)  # (w,x,y,z)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.position.is_finite():
            raise ValueError("pose position must be finite")
        w, x, y, z = self.orientation
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"orientation quaternion norm {n} not unit")


@dataclass(frozen=True)
class VelocityEstimate:
    linear: Vec3  # m/s
    window_us: int


def rotate(q: tuple[float, float, float, float], v: Vec3) -> Vec3:
    """Rotate vector v by unit quaternion q = (w,x,y,z)."""
    w, x, y, z = q
    # q * (0,v) * q^-1 expanded
    tx = 2.0 * (y * v.z - z * v.y)
    ty = 2.0 * (z * v.x - x * v.z)
    tz = 2.0 * (x * v.y - y * v.x)
    return Vec3(
        v.x + w * tx + (y * tz - z * ty),
        v.y + w * ty + (z * tx - x * tz),
        v.z + w * tz + (x * ty - y * tx),
    )


def smooth_pose(history: Sequence[Pose], alpha: float) -> Pose:
    """Exponential moving average over a device's position history.

    alpha = 1 returns the latest raw pose; orientation and timestamp always
    come from the latest sample. Output never leaves the per-axis convex hull
    of the inputs.
    """
    if not history:
        raise EmptyHistory("smooth_pose needs at least one sample")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    sm = history[0].position
    for pose in history[1:]:
        p = pose.position
        sm = Vec3(
            alpha * p.x + (1.0 - alpha) * sm.x,
            alpha * p.y + (1.0 - alpha) * sm.y,
            alpha * p.z + (1.0 - alpha) * sm.z,
        )
    last = history[-1]
    return Pose(last.device_id, last.role, last.timestamp_us, sm, last.orientation)


def estimate_velocity(history: Sequence[Pose], window_us: int) -> VelocityEstimate:
    """Least-squares linear fit of position vs time over the trailing window.

    More robust to tracker jitter than a two-point difference; with exactly
    two samples it reduces to the finite difference.
    """
    if window_us <= 0:
        raise ValueError("window_us must be positive")
    if not history:
        raise InsufficientSamples("no samples")
    latest = history[-1].timestamp_us
    window = [p for p in history if latest - p.timestamp_us <= window_us]
    if len(window) < 2:
        raise InsufficientSamples(f"{len(window)} samples inside window")
    # center times (seconds) to keep the normal equations well conditioned
    ts = [(p.timestamp_us - latest) * 1e-6 for p in window]
    tbar = math.fsum(ts) / len(ts)
    dts = [t - tbar for t in ts]
    denom = math.fsum(dt * dt for dt in dts)
    if denom == 0.0:
        raise InsufficientSamples("all samples share one timestamp")

    def slope(coord: Iterable[float]) -> float:
        # translate by the first sample so constant tracks give exactly zero
        xs = list(coord)
        rel = [x - xs[0] for x in xs]
        rbar = math.fsum(rel) / len(rel)
        return math.fsum(dt * (r - rbar) for dt, r in zip(dts, rel)) / denom

    v = Vec3(
        slope(p.position.x for p in window),
        slope(p.position.y for p in window),
        slope(p.position.z for p in window),
    )
    return VelocityEstimate(v, window_us)


# -- skeleton ----------------------------------------------------------------


@dataclass(frozen=True)
class SkeletonConfig:
    """Bone lengths and attachment offsets, all meters.

    Shoulders/hips hang off the pelvis->head axis; limb chains are solved with
    two-bone IK against the hand/foot trackers.
    """

    upper_arm: float = 0.30
    forearm: float = 0.30
    thigh: float = 0.45
    shin: float = 0.45
    shoulder_half: float = 0.20
    hip_half: float = 0.12
    neck_fraction: float = 0.85   # spine top along pelvis->head
    spine_fraction: float = 0.50
    staleness_us: int = 200_000   # one dropped packet at 90 Hz is ~11 ms

    def as_dict(self) -> dict:
        return {
            "upper_arm": self.upper_arm,
            "forearm": self.forearm,
            "thigh": self.thigh,
            "shin": self.shin,
            "shoulder_half": self.shoulder_half,
            "hip_half": self.hip_half,
            "neck_fraction": self.neck_fraction,
            "spine_fraction": self.spine_fraction,
            "staleness_us": self.staleness_us,
        }


@dataclass(frozen=True)
class AvatarPose:
    joints: dict[str, Vec3]
    trigger_state: frozenset[str] = field(default_factory=frozenset)

    JOINT_NAMES = (
        "pelvis", "spine", "head",
        "left_shoulder", "right_shoulder",
        "left_elbow", "right_elbow",
        "left_wrist", "right_wrist",
        "left_hip", "right_hip",
        "left_knee", "right_knee",
        "left_ankle", "right_ankle",
    )

    def with_triggers(self, names: Iterable[str]) -> "AvatarPose":
        return AvatarPose(self.joints, frozenset(names))


def solve_two_bone(
    root: Vec3,
    target: Vec3,
    upper_len: float,
    lower_len: float,
    pole: Vec3,
) -> tuple[Vec3, Vec3]:
    """Analytic two-bone IK: returns (mid joint, end effector).

    The mid joint bends toward ``pole``. Out-of-reach targets clamp the end
    effector to full extension along root->target; the chain is then straight.
    Both bone lengths are preserved exactly for reachable targets.
    """
    if upper_len <= 0 or lower_len <= 0:
        raise ValueError("bone lengths must be positive")
    to_target = target - root
    dist = to_target.norm()
    reach = upper_len + lower_len
    if dist < 1e-12:
        # target collapsed onto the root: extend along the pole (or x) for determinism
        axis = pole if pole.norm() > 1e-12 else Vec3(1.0, 0.0, 0.0)
        axis = axis.normalized()
        to_target = axis
        dist = 1.0
    axis = to_target.scale(1.0 / dist)

    if dist >= reach:
        end = root + axis.scale(reach)
        mid = root + axis.scale(upper_len)
        return mid, end

    # clamp below |a-b| so the triangle stays valid when one bone dwarfs the other
    min_dist = abs(upper_len - lower_len)
    d = max(dist, min_dist + 1e-9)
    end = target if d == dist else root + axis.scale(d)

    cos_root = (upper_len * upper_len + d * d - lower_len * lower_len) / (2.0 * upper_len * d)
    cos_root = max(-1.0, min(1.0, cos_root))
    sin_root = math.sqrt(max(0.0, 1.0 - cos_root * cos_root))

    # bend direction: pole component perpendicular to the chain axis
    perp = pole - axis.scale(pole.dot(axis))
    if perp.norm() < 1e-9:
        fallback = Vec3(0.0, 1.0, 0.0) if abs(axis.y) < 0.9 else Vec3(1.0, 0.0, 0.0)
        perp = fallback - axis.scale(fallback.dot(axis))
    perp = perp.normalized()

    mid = root + axis.scale(cos_root * upper_len) + perp.scale(sin_root * upper_len)
    return mid, end


def solve_skeleton(
    poses: dict[str, Pose],
    skeleton: SkeletonConfig,
    now_us: int | None = None,
) -> AvatarPose:
    """Solve the six-point avatar.

    Pelvis, head, wrists and ankles pin to tracker positions; elbows and knees
    come from two-bone IK with fixed pole directions (elbows backward, knees
    forward relative to the waist tracker's facing). Deterministic: identical
    inputs give bit-identical joints.
    """
    for role in BODY_ROLES:
        if role not in poses:
            raise MissingDevice(role)
    newest = max(p.timestamp_us for p in poses.values())
    ref = newest if now_us is None else now_us
    for role in BODY_ROLES:
        age = ref - poses[role].timestamp_us
        if age > skeleton.staleness_us:
            raise StalePose(role, age)

    pelvis = poses[WAIST].position
    head = poses[HEAD].position
    torso = head - pelvis
    tlen = torso.norm()
    up = torso.scale(1.0 / tlen) if tlen > 1e-9 else Vec3(0.0, 1.0, 0.0)

    # facing from the waist tracker, projected off the torso axis
    facing = rotate(poses[WAIST].orientation, Vec3(0.0, 0.0, 1.0))
    facing = facing - up.scale(facing.dot(up))
    if facing.norm() < 1e-9:
        facing = Vec3(0.0, 0.0, 1.0) - up.scale(up.z)
    facing = facing.normalized()
    lateral = up.cross(facing)  # presenter's left when facing +z

    spine = pelvis + torso.scale(skeleton.spine_fraction)
    neck = pelvis + torso.scale(skeleton.neck_fraction)
    l_sh = neck + lateral.scale(skeleton.shoulder_half)
    r_sh = neck - lateral.scale(skeleton.shoulder_half)
    l_hip = pelvis + lateral.scale(skeleton.hip_half)
    r_hip = pelvis - lateral.scale(skeleton.hip_half)

    elbow_pole = facing.scale(-1.0)
    knee_pole = facing

    l_elbow, l_wrist = solve_two_bone(
        l_sh, poses[LEFT_HAND].position, skeleton.upper_arm, skeleton.forearm, elbow_pole)
    r_elbow, r_wrist = solve_two_bone(
        r_sh, poses[RIGHT_HAND].position, skeleton.upper_arm, skeleton.forearm, elbow_pole)
    l_knee, l_ankle = solve_two_bone(
        l_hip, poses[LEFT_FOOT].position, skeleton.thigh, skeleton.shin, knee_pole)
    r_knee, r_ankle = solve_two_bone(
        r_hip, poses[RIGHT_FOOT].position, skeleton.thigh, skeleton.shin, knee_pole)

    joints = {
        "pelvis": pelvis,
        "spine": spine,
        "head": head,
        "left_shoulder": l_sh,
        "right_shoulder": r_sh,
        "left_elbow": l_elbow,
        "right_elbow": r_elbow,
        "left_wrist": l_wrist,
        "right_wrist": r_wrist,
        "left_hip": l_hip,
        "right_hip": r_hip,
        "left_knee": l_knee,
        "right_knee": r_knee,
        "left_ankle": l_ankle,
        "right_ankle": r_ankle,
    }
    for name, j in joints.items():
        if not j.is_finite():
            raise ValueError(f"solved joint {name} is non-finite")
    return AvatarPose(joints)


def calibrate_skeleton(poses: dict[str, Pose], base: SkeletonConfig) -> SkeletonConfig:
    """Derive bone lengths from one frame with all six devices present,
    assuming near-extended limbs. Split 50/50 between the two limb bones."""
    for role in BODY_ROLES:
        if role not in poses:
            raise MissingDevice(role)
    pelvis = poses[WAIST].position
    head = poses[HEAD].position
    torso = head - pelvis
    up = torso.normalized() if torso.norm() > 1e-9 else Vec3(0.0, 1.0, 0.0)
    neck = pelvis + torso.scale(base.neck_fraction)

    facing = rotate(poses[WAIST].orientation, Vec3(0.0, 0.0, 1.0))
    facing = facing - up.scale(facing.dot(up))
    facing = facing.normalized() if facing.norm() > 1e-9 else Vec3(0.0, 0.0, 1.0)
    lateral = up.cross(facing)

    l_arm = (poses[LEFT_HAND].position - (neck + lateral.scale(base.shoulder_half))).norm()
    r_arm = (poses[RIGHT_HAND].position - (neck - lateral.scale(base.shoulder_half))).norm()
    l_leg = (poses[LEFT_FOOT].position - (pelvis + lateral.scale(base.hip_half))).norm()
    r_leg = (poses[RIGHT_FOOT].position - (pelvis - lateral.scale(base.hip_half))).norm()
    arm = (l_arm + r_arm) / 2.0
    leg = (l_leg + r_leg) / 2.0
    return SkeletonConfig(
        upper_arm=arm / 2.0,
        forearm=arm / 2.0,
        thigh=leg / 2.0,
        shin=leg / 2.0,
        shoulder_half=base.shoulder_half,
        hip_half=base.hip_half,
        neck_fraction=base.neck_fraction,
        spine_fraction=base.spine_fraction,
        staleness_us=base.staleness_us,
    )


# -- pose triggers -----------------------------------------------------------


@dataclass(frozen=True)
class TriggerRule:
    """A named geometric predicate over solved avatar joints.

    Kinds:
      wrists_above_head   both wrists strictly higher than head + margin_m
      wrists_apart        wrist separation strictly greater than min_m
      head_below          head strictly lower than max_height_m (crouch)
    """

    name: str
    kind: str
    margin_m: float = 0.1
    min_m: float = 1.2
    max_height_m: float = 1.0

    KINDS = ("wrists_above_head", "wrists_apart", "head_below")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown trigger kind {self.kind!r}")

    def holds(self, avatar: AvatarPose) -> bool:
        j = avatar.joints
        if self.kind == "wrists_above_head":
            limit = j["head"].y + self.margin_m
            return j["left_wrist"].y > limit and j["right_wrist"].y > limit
        if self.kind == "wrists_apart":
            return (j["left_wrist"] - j["right_wrist"]).norm() > self.min_m
        return j["head"].y < self.max_height_m


def detect_pose_triggers(avatar: AvatarPose, rules: Sequence[TriggerRule]) -> set[str]:
    """Names of all rules whose predicate holds. Boundary cases are excluded:
    every predicate uses strict inequality."""
    return {rule.name for rule in rules if rule.holds(avatar)}
