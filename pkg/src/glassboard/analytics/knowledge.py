"""Scoring for the pre/post knowledge test: four single-choice questions worth
one point, two multiple-choice questions worth two points (exact set match),
and six open-ended responses rated 0-5, for a maximum of 38."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import RatingOutOfRange

N_SINGLE = 4
N_MULTIPLE = 2
N_OPEN = 6
OPEN_MAX = 5
MAX_SCORE = N_SINGLE * 1 + N_MULTIPLE * 2 + N_OPEN * OPEN_MAX  # 38


@dataclass(frozen=True)
class AnswerKey:
    single_choice: tuple[str, ...]
    multiple_choice: tuple[frozenset[str], ...]

    def __post_init__(self):
        if len(self.single_choice) != N_SINGLE:
            raise ValueError(f"key needs {N_SINGLE} single-choice answers")
        if len(self.multiple_choice) != N_MULTIPLE:
            raise ValueError(f"key needs {N_MULTIPLE} multiple-choice answer sets")

    @staticmethod
    def from_lists(single: Sequence[str], multiple: Sequence[Sequence[str]]) -> "AnswerKey":
        return AnswerKey(tuple(single), tuple(frozenset(m) for m in multiple))


@dataclass(frozen=True)
class KnowledgeTestResponse:
    single_choice: tuple[str, ...]
    multiple_choice: tuple[frozenset[str], ...]
    open_ratings: tuple[int, ...]

    def __post_init__(self):
        if len(self.single_choice) != N_SINGLE:
            raise ValueError(f"response needs {N_SINGLE} single-choice answers")
        if len(self.multiple_choice) != N_MULTIPLE:
            raise ValueError(f"response needs {N_MULTIPLE} multiple-choice answer sets")
        if len(self.open_ratings) != N_OPEN:
            raise ValueError(f"response needs {N_OPEN} open-ended ratings")
        for i, r in enumerate(self.open_ratings):
            if isinstance(r, bool) or not isinstance(r, int) or not (0 <= r <= OPEN_MAX):
                raise RatingOutOfRange(f"open rating [{i}] = {r!r} outside [0, {OPEN_MAX}]")

    @staticmethod
    def from_lists(single: Sequence[str], multiple: Sequence[Sequence[str]],
                   open_ratings: Sequence[int]) -> "KnowledgeTestResponse":
        return KnowledgeTestResponse(
            tuple(single), tuple(frozenset(m) for m in multiple), tuple(open_ratings))


def score_test(resp: KnowledgeTestResponse, key: AnswerKey) -> int:
    """+1 per correct single choice, +2 per exactly-correct multiple-choice
    set, plus the sum of open-ended ratings. Monotone in every answer."""
    score = sum(1 for got, want in zip(resp.single_choice, key.single_choice) if got == want)
    score += sum(2 for got, want in zip(resp.multiple_choice, key.multiple_choice) if got == want)
    score += sum(resp.open_ratings)
    return score
