#!/usr/bin/env python3
"""Regenerate the bundled scenario scripts (committed as package data).

Each script is JSONL of valid wire messages; commands carry at_us in the
payload for timing, pose updates use their own timestamp_us.
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from glassboard.geometry import Vec3  # noqa: E402
from glassboard.protocol import Message, command_msg, encode, hello_msg  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "glassboard" / "scenarios"

RATE_HZ = 90
STEP_US = round(1_000_000 / RATE_HZ)


def pose_line(seq, device, role, t_us, x, y, z):
    return Message("pose_update", seq, {
        "device_id": device, "role": role, "timestamp_us": t_us,
        "position": [round(x, 6), round(y, 6), round(z, 6)],
        "orientation": [1.0, 0.0, 0.0, 0.0],
    })


def write(name, messages):
    path = OUT / f"{name}.jsonl"
    with path.open("wb") as fh:
        for msg in messages:
            fh.write(encode(msg))
    print(f"{path}: {len(messages)} entries")


def presentation():
    seq = 0
    msgs = []

    def nxt():
        nonlocal seq
        seq += 1
        return seq

    msgs.append(hello_msg(nxt(), client="script", at_us=0))
    for i, name in enumerate(("next_slide", "next_slide", "next_slide",
                              "next_slide", "prev_slide")):
        msgs.append(command_msg(nxt(), name, at_us=500_000 * (i + 1)))
    write("presentation", msgs)


def roleplay_afterimage():
    seq = 0
    msgs = []

    def nxt():
        nonlocal seq
        seq += 1
        return seq

    msgs.append(hello_msg(nxt(), client="script", at_us=0))
    msgs.append(command_msg(nxt(), "set_role_play", {"on": True}, at_us=50_000))
    trackers = (
        ("tr-head", "head", 0.0, 1.70), ("tr-waist", "waist", 0.0, 1.00),
        ("tr-lh", "left_hand", 0.40, 1.30), ("tr-rh", "right_hand", -0.40, 1.30),
        ("tr-lf", "left_foot", 0.15, 0.15), ("tr-rf", "right_foot", -0.15, 0.15),
    )
    t = 100_000
    frozen = set()
    while t <= 3_000_000:
        ts = t * 1e-6
        sway = 0.15 * math.sin(2 * math.pi * 0.5 * ts)
        lift = 0.25 * max(0.0, math.sin(2 * math.pi * 0.4 * ts))
        for device, role, x, y in trackers:
            yy = y + (lift if role == "left_hand" else 0.0)
            msgs.append(pose_line(nxt(), device, role, t, x + sway, yy, -1.0))
        for mark in (1_500_000, 2_500_000):
            if mark not in frozen and t >= mark:
                msgs.append(command_msg(nxt(), "freeze_afterimage", at_us=t))
                frozen.add(mark)
        t += STEP_US
    write("roleplay_afterimage", msgs)


def ball_handoff():
    seq = 0
    msgs = []

    def nxt():
        nonlocal seq
        seq += 1
        return seq

    msgs.append(hello_msg(nxt(), client="script", at_us=0))
    # physical ball flies from the audience toward the screen under gravity
    p = Vec3(0.5, 1.2, 2.0)
    v = Vec3(-0.4, 1.5, -4.0)
    g = Vec3(0.0, -9.81, 0.0)
    t = 0
    dt = STEP_US * 1e-6
    while p.z > -0.2 and t < 2_000_000:
        msgs.append(pose_line(nxt(), "tr-ball", "ball", t, p.x, p.y, p.z))
        v = v + g.scale(dt)
        p = p + v.scale(dt)
        t += STEP_US
    write("ball_handoff", msgs)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    presentation()
    roleplay_afterimage()
    ball_handoff()
