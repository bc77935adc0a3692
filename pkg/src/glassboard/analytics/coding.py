"""Behavior coding: the nonverbal observation scheme, random clip-window
sampling, and per-type duration aggregation.

Time is quantized to 0.1 s units throughout; durations are computed as exact
decisecond integers and reported as seconds.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import Infeasible

AFFECTIVE = "affective"
POSTURE = "posture"
BEHAVIOR = "behavior"

# nonverbal coding scheme: three categories, mutually exclusive types within each
BEHAVIOR_TYPES: dict[str, str] = {
    "high_arousal_positive": AFFECTIVE,
    "low_arousal_positive": AFFECTIVE,
    "high_arousal_negative": AFFECTIVE,
    "low_arousal_negative": AFFECTIVE,
    "close_posture": POSTURE,
    "neutral_posture": POSTURE,
    "leave_posture": POSTURE,
    "positive_behavior": BEHAVIOR,
    "normal_behavior": BEHAVIOR,
    "misbehavior": BEHAVIOR,
}

TIME_UNIT_S = 0.1


def _to_deci(t_s: float) -> int:
    return int(round(t_s * 10.0))


def _is_quantized(t_s: float) -> bool:
    return abs(t_s * 10.0 - round(t_s * 10.0)) < 1e-6


@dataclass(frozen=True)
class BehaviorEvent:
    """One coded interval of a student's nonverbal state."""

    student_id: str
    category: str
    type: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.type not in BEHAVIOR_TYPES:
            raise ValueError(f"unknown behavior type {self.type!r}")
        if BEHAVIOR_TYPES[self.type] != self.category:
            raise ValueError(f"type {self.type!r} does not belong to category {self.category!r}")
        if not self.end_s > self.start_s:
            raise ValueError("end_s must exceed start_s")
        if not (_is_quantized(self.start_s) and _is_quantized(self.end_s)):
            raise ValueError("interval bounds must be multiples of 0.1 s")


def sample_windows(clip_len_s: float, n: int, w: float, seed: int) -> list[tuple[float, float]]:
    """n disjoint [start, start+w) observation windows, uniform over all
    disjoint placements in [0, clip_len_s], sorted ascending, deterministic
    for a given seed. Starts land on the 0.1 s coding grid so window overlap
    arithmetic downstream is exact.

    Sampling uses the order-statistics construction (sorted uniforms plus
    cumulative window widths), which draws from exactly the uniform
    disjoint-placement distribution and still terminates when n*w equals the
    clip length, where naive rejection would stall.
    """
    if n <= 0 or w <= 0:
        raise ValueError("n and w must be positive")
    if not _is_quantized(w):
        raise ValueError("window length must be a multiple of 0.1 s")
    slack = clip_len_s - n * w
    if slack < 0:
        raise Infeasible(f"{n} windows of {w}s exceed clip of {clip_len_s}s")
    rng = random.Random(seed)
    cuts = sorted(rng.uniform(0.0, slack) for _ in range(n))
    grid_cuts = [math.floor(cut * 10.0) / 10.0 for cut in cuts]  # monotone, keeps disjointness
    return [(cut + i * w, cut + i * w + w) for i, cut in enumerate(grid_cuts)]


def aggregate_behavior(
    events: Iterable[BehaviorEvent],
    windows: Sequence[tuple[float, float]],
) -> dict[str, dict[str, float]]:
    """Per-student, per-type total duration (seconds) of each coded state
    inside the observation windows. Types with no overlap report 0.0."""
    win_deci = [(_to_deci(a), _to_deci(b)) for a, b in windows]
    totals: dict[str, dict[str, int]] = {}
    for ev in events:
        s, e = _to_deci(ev.start_s), _to_deci(ev.end_s)
        overlap = 0
        for wa, wb in win_deci:
            overlap += max(0, min(e, wb) - max(s, wa))
        if overlap == 0:
            continue
        per = totals.setdefault(ev.student_id, {})
        per[ev.type] = per.get(ev.type, 0) + overlap
    out: dict[str, dict[str, float]] = {}
    for student, per in totals.items():
        out[student] = {t: deci / 10.0 for t, deci in per.items()}
    return out


def duration_vector(
    aggregated: dict[str, dict[str, float]],
    students: Sequence[str],
    behavior_type: str,
) -> list[float]:
    """Fixed-order per-student durations for one type; absent students or
    types contribute 0.0 so group vectors stay aligned with the roster."""
    return [aggregated.get(s, {}).get(behavior_type, 0.0) for s in students]
