"""Transcript coding and discourse metrics.

Teacher utterances carry a speech type from the classroom interaction scheme
(lecturing, directing, close/open questions); student utterances carry a
speech type (assertion, question, exclamation) and optionally one of six
cognitive levels. Discourse metrics reproduce the per-minute row structure of
the engagement analysis: speaking turns, per-student speaking rates, sentence
statistics, speech-type rates, and cognitive-level rates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

TEACHER = "teacher"
STUDENT = "student"

TEACHER_TYPES = ("lecturing", "directing", "close_question", "open_question")
STUDENT_TYPES = ("assertion", "question", "exclamation")
COGNITIVE_LEVELS = ("remembering", "understanding", "applying",
                    "analyzing", "evaluation", "creation")

_SENTENCE_SPLIT = re.compile(r"[.!?。！？]+")


@dataclass(frozen=True)
class Utterance:
    speaker: str                 # "teacher" | "student"
    text: str
    start_s: float
    speech_type: str
    student_id: str | None = None
    cognitive_level: str | None = None

    def __post_init__(self):
        if self.speaker == TEACHER:
            if self.speech_type not in TEACHER_TYPES:
                raise ValueError(f"teacher speech type {self.speech_type!r} invalid")
            if self.cognitive_level is not None:
                raise ValueError("cognitive levels apply to student utterances only")
        elif self.speaker == STUDENT:
            if self.speech_type not in STUDENT_TYPES:
                raise ValueError(f"student speech type {self.speech_type!r} invalid")
            if not self.student_id:
                raise ValueError("student utterances need a student_id")
            if self.cognitive_level is not None and self.cognitive_level not in COGNITIVE_LEVELS:
                raise ValueError(f"unknown cognitive level {self.cognitive_level!r}")
        else:
            raise ValueError(f"speaker must be teacher|student, got {self.speaker!r}")

    @property
    def words(self) -> int:
        return len(self.text.split())

    @property
    def sentences(self) -> int:
        parts = [p for p in _SENTENCE_SPLIT.split(self.text) if p.strip()]
        return max(1, len(parts)) if self.text.strip() else 0


@dataclass
class StudentDiscourse:
    utterances: int = 0
    words: int = 0
    sentences: int = 0
    turns: int = 0
    turn_words: list[int] = field(default_factory=list)
    speech_counts: dict[str, int] = field(default_factory=dict)
    cognitive_counts: dict[str, int] = field(default_factory=dict)

    # per-minute rates filled by discourse_metrics
    speaking_times_per_min: float = 0.0
    words_per_min: float = 0.0
    sentences_per_min: float = 0.0
    mean_sentence_length: float = 0.0
    mean_turn_length: float = 0.0
    speech_per_min: dict[str, float] = field(default_factory=dict)
    cognitive_per_min: dict[str, float] = field(default_factory=dict)


@dataclass
class DiscourseMetrics:
    duration_min: float
    speaking_turns_per_min: float
    per_student: dict[str, StudentDiscourse]
    teacher_counts: dict[str, int]
    teacher_per_min: dict[str, float]


def discourse_metrics(transcript: Sequence[Utterance], duration_min: float) -> DiscourseMetrics:
    """Roll a coded transcript up into the engagement rate metrics.

    A speaking turn is a maximal run of consecutive utterances by the same
    speaker (students distinguished by id); the turn count is speaker changes
    plus one. Sentence boundaries come from terminal punctuation; an
    unpunctuated utterance counts as one sentence.
    """
    if duration_min <= 0:
        raise ValueError("duration_min must be positive")

    per: dict[str, StudentDiscourse] = {}
    teacher_counts = {t: 0 for t in TEACHER_TYPES}
    turns = 0
    prev_key: str | None = None
    for utt in transcript:
        key = TEACHER if utt.speaker == TEACHER else f"s:{utt.student_id}"
        if key != prev_key:
            turns += 1
            if utt.speaker == STUDENT:
                sd = per.setdefault(utt.student_id, StudentDiscourse())
                sd.turns += 1
                sd.turn_words.append(0)
            prev_key = key
        if utt.speaker == TEACHER:
            teacher_counts[utt.speech_type] += 1
            continue
        sd = per.setdefault(utt.student_id, StudentDiscourse())
        if not sd.turn_words:
            sd.turn_words.append(0)
        sd.utterances += 1
        sd.words += utt.words
        sd.sentences += utt.sentences
        sd.turn_words[-1] += utt.words
        sd.speech_counts[utt.speech_type] = sd.speech_counts.get(utt.speech_type, 0) + 1
        if utt.cognitive_level:
            sd.cognitive_counts[utt.cognitive_level] = sd.cognitive_counts.get(utt.cognitive_level, 0) + 1

    for sd in per.values():
        sd.speaking_times_per_min = sd.utterances / duration_min
        sd.words_per_min = sd.words / duration_min
        sd.sentences_per_min = sd.sentences / duration_min
        sd.mean_sentence_length = sd.words / sd.sentences if sd.sentences else 0.0
        sd.mean_turn_length = (sum(sd.turn_words) / len(sd.turn_words)) if sd.turn_words else 0.0
        sd.speech_per_min = {t: sd.speech_counts.get(t, 0) / duration_min for t in STUDENT_TYPES}
        sd.cognitive_per_min = {t: sd.cognitive_counts.get(t, 0) / duration_min for t in COGNITIVE_LEVELS}

    return DiscourseMetrics(
        duration_min=duration_min,
        speaking_turns_per_min=turns / duration_min,
        per_student=per,
        teacher_counts=teacher_counts,
        teacher_per_min={t: c / duration_min for t, c in teacher_counts.items()},
    )
