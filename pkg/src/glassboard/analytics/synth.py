"""Synthetic two-group session datasets with controllable injected effects.

Both groups draw identical base data from per-student sub-seeds, so every
variable is exactly null between groups until an effect is injected. Group A
can receive extra close-posture time (carved out of uncoded gaps inside the
observation windows, leaving all other coded durations untouched) and an
amplitude gain on the class recording after the baseline quarter.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

import numpy as np

from .audio import write_wav
from .coding import sample_windows

SESSION_LEN_S = 600.0
DURATION_MIN = 10.0
N_WINDOWS = 9
WINDOW_S = 10.0
AUDIO_RATE = 8000
AUDIO_LEN_S = 40.0

_WORDS = ("planet", "mars", "jupiter", "sun", "orbit", "gravity", "moon",
          "ring", "gas", "rock", "hot", "cold", "big", "far", "near", "light")


def _chunks(rng: random.Random, total_deci: int, max_chunks: int = 3) -> list[int]:
    """Split a decisecond budget into 1..max_chunks positive pieces."""
    if total_deci <= 0:
        return []
    k = rng.randint(1, min(max_chunks, total_deci))
    cuts = sorted(rng.sample(range(1, total_deci), k - 1)) if k > 1 else []
    pieces, prev = [], 0
    for c in cuts + [total_deci]:
        pieces.append(c - prev)
        prev = c
    return pieces


def _materialize(segments: list[tuple[str | None, int]],
                 windows: list[tuple[float, float]],
                 student_id: str, category: str) -> list[dict]:
    """Lay (type, deciseconds) segments head-to-tail through the observation
    windows; None segments consume time without emitting an event."""
    events = []
    win_iter = iter(windows)
    w0, w1 = next(win_iter)
    cursor = int(round(w0 * 10))
    wend = int(round(w1 * 10))
    for kind, deci in segments:
        remaining = deci
        while remaining > 0:
            if cursor >= wend:
                nxt = next(win_iter, None)
                if nxt is None:
                    return events  # budget exceeded the windows; drop the tail
                w0, w1 = nxt
                cursor = int(round(w0 * 10))
                wend = int(round(w1 * 10))
            take = min(remaining, wend - cursor)
            if kind is not None:
                events.append({
                    "student_id": student_id, "category": category, "type": kind,
                    "start_s": cursor / 10.0, "end_s": (cursor + take) / 10.0,
                })
            cursor += take
            remaining -= take
    return events


def _student_events(rng: random.Random, student_id: str,
                    windows: list[tuple[float, float]],
                    inject_close_deci: int) -> list[dict]:
    events: list[dict] = []

    def lay(category: str, budget: list[tuple[str, int]], inject: tuple[str, int] | None):
        segments: list[tuple[str | None, int]] = []
        for kind, deci in budget:
            for piece in _chunks(rng, deci):
                segments.append((kind, piece))
        rng.shuffle(segments)
        if inject is not None and inject[1] > 0:
            segments.append(inject)  # consumes tail gap; base layout unchanged
        events.extend(_materialize(segments, windows, student_id, category))

    # per-category budgets (deciseconds) inside the 900-decisecond windows;
    # totals stay <= 550 so >= 350 of gap remains for injection headroom
    lay("posture", [
        ("close_posture", rng.randrange(50, 201)),
        ("neutral_posture", rng.randrange(150, 301)),
        ("leave_posture", rng.randrange(0, 51)),
    ], ("close_posture", inject_close_deci))
    lay("behavior", [
        ("positive_behavior", rng.randrange(0, 81)),
        ("normal_behavior", rng.randrange(300, 501)),
        ("misbehavior", rng.randrange(0, 61)),
    ], None)
    lay("affective", [
        ("high_arousal_positive", rng.randrange(0, 61)),
        ("low_arousal_positive", rng.randrange(300, 601)),
        ("low_arousal_negative", rng.randrange(0, 41)),
    ], None)
    return events


def _sentence(rng: random.Random, n_words: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n_words)).capitalize() + "."


def _transcript(rng: random.Random, students: list[str]) -> list[dict]:
    lines: list[dict] = []
    t = 0.0
    teacher_types = ["lecturing", "lecturing", "lecturing", "directing",
                     "close_question", "close_question", "open_question"]
    levels = ["remembering", "remembering", "remembering", "understanding",
              "understanding", "analyzing", None]
    stypes = ["assertion", "assertion", "assertion", "question", "exclamation"]
    for _ in range(40):
        t += rng.uniform(4.0, 10.0)
        lines.append({"speaker": "teacher", "text": _sentence(rng, rng.randint(4, 10)),
                      "start_s": round(t, 1), "speech_type": rng.choice(teacher_types)})
        for _ in range(rng.randint(1, 3)):
            sid = students[rng.randrange(len(students))]
            t += rng.uniform(1.0, 5.0)
            stype = rng.choice(stypes)
            line = {"speaker": "student", "student_id": sid,
                    "text": "wow" if stype == "exclamation" else _sentence(rng, rng.randint(1, 5)),
                    "start_s": round(t, 1), "speech_type": stype}
            level = rng.choice(levels)
            if stype != "exclamation" and level:
                line["cognitive_level"] = level
            lines.append(line)
    return lines


def _tests(rng: random.Random, students: list[str]) -> list[dict]:
    opts = ["a", "b", "c", "d"]
    out = []
    for sid in students:
        for phase, bonus in (("pre", 0), ("post", 1)):
            out.append({
                "student_id": sid, "phase": phase,
                "single_choice": [rng.choice(opts) for _ in range(4)],
                "multiple_choice": [sorted(rng.sample(opts, rng.randint(1, 3))) for _ in range(2)],
                "open_ratings": [min(5, rng.randint(0, 4) + bonus) for _ in range(6)],
            })
    return out


def _audio(seed: int, gain: float) -> np.ndarray:
    gen = np.random.default_rng(seed)
    n = int(AUDIO_RATE * AUDIO_LEN_S)
    t = np.arange(n) / AUDIO_RATE
    base = (0.08 * np.sin(2 * math.pi * 220.0 * t)
            + 0.05 * np.sin(2 * math.pi * 471.0 * t)
            + 0.04 * gen.standard_normal(n))
    if gain != 1.0:
        cut = n // 4  # the baseline quarter stays untouched
        base = base.copy()
        base[cut:] *= gain
    return np.clip(base, -0.99, 0.99)


def make_group(
    out_dir: str | Path,
    label: str,
    prefix: str,
    seed: int,
    n_students: int = 18,
    inject_close_posture_s: float = 0.0,
    inject_loudness_gain: float = 1.0,
) -> Path:
    """Write one group directory. Base draws depend only on (seed, student
    index), never on the label, so two groups from the same seed are
    identical until injections differ."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    students = [f"{prefix}{i:02d}" for i in range(1, n_students + 1)]
    windows = sample_windows(SESSION_LEN_S, N_WINDOWS, WINDOW_S, seed)

    # integer sub-seeds only: string/tuple seeding hashes with the per-process
    # salt and would break cross-run determinism
    inject_deci = int(round(inject_close_posture_s * 10))
    events: list[dict] = []
    for i, sid in enumerate(students):
        rng = random.Random(seed * 1_000_003 + i)
        events.extend(_student_events(rng, sid, windows, inject_deci))
    events.sort(key=lambda e: (e["start_s"], e["student_id"], e["category"]))

    transcript = _transcript(random.Random(seed * 1_000_003 + 900_001), students)
    tests = _tests(random.Random(seed * 1_000_003 + 900_002), students)

    (d / "roster.json").write_text(
        json.dumps({"label": label, "students": students}, indent=1), encoding="utf-8")
    (d / "meta.json").write_text(json.dumps({
        "duration_min": DURATION_MIN,
        "session_len_s": SESSION_LEN_S,
        "windows": [[a, b] for a, b in windows],
    }, indent=1), encoding="utf-8")
    with (d / "events.jsonl").open("w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
    with (d / "transcript.jsonl").open("w", encoding="utf-8") as fh:
        for line in transcript:
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    with (d / "tests.jsonl").open("w", encoding="utf-8") as fh:
        for row in tests:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    write_wav(d / "audio.wav", _audio(seed, inject_loudness_gain), AUDIO_RATE)
    return d


def make_synthetic_dataset(
    out_dir: str | Path,
    seed: int = 0,
    n_students: int = 18,
    inject_close_posture_s: float = 30.0,
    inject_loudness_gain: float = 1.5,
) -> Path:
    """Two-group dataset; pass zero/one injections for a pure null dataset."""
    d = Path(out_dir)
    make_group(d / "groupA", "holo", "a", seed, n_students,
               inject_close_posture_s=inject_close_posture_s,
               inject_loudness_gain=inject_loudness_gain)
    make_group(d / "groupB", "normal", "b", seed, n_students)
    return d
