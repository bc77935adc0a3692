"""Dataset loading for the analytics pipeline.

A two-group dataset directory holds one subdirectory per group:

    dataset/
      groupA/
        roster.json       {"label": "A", "students": ["a01", ...]}
        meta.json         {"duration_min": 10.0, "session_len_s": 600.0,
                           "windows": [[start_s, end_s], ...]}
        events.jsonl      one coded behavior interval per line
        transcript.jsonl  one coded utterance per line
        tests.jsonl       optional knowledge-test responses
        audio.wav         optional mono 16-bit PCM class recording
      groupB/...

Schema problems raise SchemaViolation carrying file:line so the CLI can point
at the offending input.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SchemaViolation
from .audio import load_wav
from .coding import BehaviorEvent
from .knowledge import KnowledgeTestResponse
from .transcript import Utterance


@dataclass
class GroupDataset:
    label: str
    students: list[str]
    duration_min: float
    windows: list[tuple[float, float]]
    events: list[BehaviorEvent] = field(default_factory=list)
    transcript: list[Utterance] = field(default_factory=list)
    audio: tuple[np.ndarray, int] | None = None   # (samples, rate)
    tests: list[dict] | None = None               # raw per-student responses

    @property
    def n(self) -> int:
        return len(self.students)


def _jsonl(path: Path):
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaViolation(f"{path}:{line_no}", f"invalid JSON: {e.msg}") from None


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaViolation(where, f"missing field {key!r}")
    return obj[key]


def _load_events(path: Path) -> list[BehaviorEvent]:
    events = []
    for line_no, obj in _jsonl(path):
        where = f"{path}:{line_no}"
        if not isinstance(obj, dict):
            raise SchemaViolation(where, "event must be an object")
        try:
            events.append(BehaviorEvent(
                student_id=str(_require(obj, "student_id", where)),
                category=str(_require(obj, "category", where)),
                type=str(_require(obj, "type", where)),
                start_s=float(_require(obj, "start_s", where)),
                end_s=float(_require(obj, "end_s", where)),
            ))
        except (TypeError, ValueError) as e:
            raise SchemaViolation(where, str(e)) from None
    return events


def _load_transcript(path: Path) -> list[Utterance]:
    utterances = []
    for line_no, obj in _jsonl(path):
        where = f"{path}:{line_no}"
        if not isinstance(obj, dict):
            raise SchemaViolation(where, "utterance must be an object")
        try:
            utterances.append(Utterance(
                speaker=str(_require(obj, "speaker", where)),
                text=str(_require(obj, "text", where)),
                start_s=float(_require(obj, "start_s", where)),
                speech_type=str(_require(obj, "speech_type", where)),
                student_id=obj.get("student_id"),
                cognitive_level=obj.get("cognitive_level"),
            ))
        except (TypeError, ValueError) as e:
            raise SchemaViolation(where, str(e)) from None
    utterances.sort(key=lambda u: u.start_s)
    return utterances


def _load_tests(path: Path) -> list[dict]:
    tests = []
    for line_no, obj in _jsonl(path):
        where = f"{path}:{line_no}"
        if not isinstance(obj, dict):
            raise SchemaViolation(where, "test response must be an object")
        for key in ("student_id", "phase", "single_choice", "multiple_choice", "open_ratings"):
            _require(obj, key, where)
        try:
            KnowledgeTestResponse.from_lists(
                obj["single_choice"], obj["multiple_choice"], obj["open_ratings"])
        except Exception as e:
            raise SchemaViolation(where, str(e)) from None
        tests.append(obj)
    return tests


def load_group(group_dir: str | Path) -> GroupDataset:
    d = Path(group_dir)
    roster_path = d / "roster.json"
    meta_path = d / "meta.json"
    for p in (roster_path, meta_path):
        if not p.exists():
            raise SchemaViolation(str(p), "file not found")
    try:
        roster = json.loads(roster_path.read_text(encoding="utf-8"))
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaViolation(str(d), f"invalid JSON: {e}") from None

    students = roster.get("students")
    if not isinstance(students, list) or not students or \
            not all(isinstance(s, str) for s in students):
        raise SchemaViolation(f"{roster_path}:students", "must be a non-empty string list")
    duration_min = meta.get("duration_min")
    if not isinstance(duration_min, (int, float)) or duration_min <= 0:
        raise SchemaViolation(f"{meta_path}:duration_min", "must be a positive number")
    raw_windows = meta.get("windows", [])
    windows: list[tuple[float, float]] = []
    for i, pair in enumerate(raw_windows):
        ok = (isinstance(pair, list) and len(pair) == 2
              and all(isinstance(x, (int, float)) and math.isfinite(x) for x in pair)
              and pair[0] < pair[1])
        if not ok:
            raise SchemaViolation(f"{meta_path}:windows[{i}]", "must be [start, end] with start < end")
        windows.append((float(pair[0]), float(pair[1])))

    ds = GroupDataset(
        label=str(roster.get("label", d.name)),
        students=sorted(students),
        duration_min=float(duration_min),
        windows=windows,
    )
    events_path = d / "events.jsonl"
    if events_path.exists():
        ds.events = _load_events(events_path)
    transcript_path = d / "transcript.jsonl"
    if transcript_path.exists():
        ds.transcript = _load_transcript(transcript_path)
    tests_path = d / "tests.jsonl"
    if tests_path.exists():
        ds.tests = _load_tests(tests_path)
    audio_path = d / "audio.wav"
    if audio_path.exists():
        try:
            ds.audio = load_wav(audio_path)
        except Exception as e:
            raise SchemaViolation(str(audio_path), str(e)) from None
    return ds


def load_dataset(dataset_dir: str | Path) -> tuple[GroupDataset, GroupDataset]:
    d = Path(dataset_dir)
    group_dirs = sorted(p for p in d.iterdir() if p.is_dir()) if d.is_dir() else []
    if len(group_dirs) != 2:
        raise SchemaViolation(str(d), "dataset must hold exactly two group directories")
    return load_group(group_dirs[0]), load_group(group_dirs[1])
