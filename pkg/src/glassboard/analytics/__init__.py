"""Multimodal engagement analytics: knowledge-test scoring, behavior-coding
aggregation, transcript discourse metrics, acoustic features, inter-rater
reliability, and group-comparison statistics."""

from .stats import StatResult, cohen_kappa, mann_whitney_u, t_test  # noqa: F401
from .knowledge import AnswerKey, KnowledgeTestResponse, score_test  # noqa: F401
from .coding import BehaviorEvent, aggregate_behavior, sample_windows  # noqa: F401
from .transcript import Utterance, discourse_metrics  # noqa: F401
from .audio import baseline_normalize, short_time_energy, zero_crossing_rate  # noqa: F401
from .sentiment import LexiconSentiment, sentiment  # noqa: F401
