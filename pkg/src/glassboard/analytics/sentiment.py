"""Pluggable sentiment scoring for transcript lines.

External services are deliberately out of the engine; the default provider is
a deterministic signed-lexicon lookup returning the mean score of matched
words, or a neutral 0.5 when nothing matches.
"""

from __future__ import annotations

import re
from typing import Protocol

from ..errors import ProviderUnavailable

_WORD = re.compile(r"[\w']+")

# word -> positivity in [0, 1]; small demo lexicon tuned for classroom talk
DEFAULT_LEXICON: dict[str, float] = {
    "wow": 1.0, "yay": 1.0, "yes": 0.9, "cool": 1.0, "great": 1.0,
    "awesome": 1.0, "amazing": 1.0, "fun": 0.9, "love": 1.0, "like": 0.8,
    "good": 0.9, "right": 0.8, "correct": 0.8, "interesting": 0.9,
    "no": 0.2, "boring": 0.0, "bad": 0.0, "wrong": 0.1, "hate": 0.0,
    "tired": 0.2, "sad": 0.1, "ugh": 0.0, "meh": 0.3,
}


class SentimentProvider(Protocol):
    def score(self, text: str) -> float: ...


class LexiconSentiment:
    """Mean positivity of matched lexicon words; 0.5 with no evidence."""

    def __init__(self, lexicon: dict[str, float] | None = None):
        self.lexicon = dict(DEFAULT_LEXICON if lexicon is None else lexicon)

    def score(self, text: str) -> float:
        hits = [self.lexicon[w] for w in _WORD.findall(text.lower()) if w in self.lexicon]
        if not hits:
            return 0.5
        return sum(hits) / len(hits)


class UnavailableProvider:
    """Stand-in for an external service that cannot be reached."""

    def __init__(self, reason: str = "external sentiment service not configured"):
        self.reason = reason

    def score(self, text: str) -> float:
        raise ProviderUnavailable(self.reason)


def sentiment(provider: SentimentProvider, text: str) -> dict[str, float]:
    """Score one utterance; the result is {"positive_score": x in [0, 1]}."""
    value = provider.score(text)
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"provider returned {value} outside [0, 1]")
    return {"positive_score": value}
