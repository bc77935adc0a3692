"""The group-comparison engagement report.

One row per variable in a fixed manifest covering four data families:

  video       per-student coded durations (nonparametric U test, medians)
  audio       per-frame acoustic features of the class recording (t test)
  transcript  per-student discourse rates and sentence statistics
              (t test for means, U test for speech-type and cognitive counts)
  semantic    per-student mean positivity of their utterances (t test)

Duration and count variables use the rank test; acoustic, discourse-mean and
semantic variables use the t test. Missing optional inputs (audio, sentiment)
mark their rows "absent" instead of failing the whole report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..errors import MissingVariable, ZeroVariance
from .audio import BASELINE_FRACTION, baseline_normalize, default_frames, short_time_energy
from .coding import aggregate_behavior, duration_vector
from .io import GroupDataset
from .sentiment import LexiconSentiment, SentimentProvider
from .stats import StatResult, mann_whitney_u, t_test
from .transcript import COGNITIVE_LEVELS, STUDENT_TYPES, discourse_metrics


@dataclass(frozen=True)
class RowSpec:
    variable: str
    section: str          # video | audio | transcript | semantic
    test: str             # "u" | "t" | "none"


MANIFEST: tuple[RowSpec, ...] = (
    # coded nonverbal durations, seconds inside the observation windows
    RowSpec("close_posture", "video", "u"),
    RowSpec("neutral_posture", "video", "u"),
    RowSpec("leave_posture", "video", "u"),
    RowSpec("positive_behavior", "video", "u"),
    RowSpec("normal_behavior", "video", "u"),
    RowSpec("misbehavior", "video", "u"),
    RowSpec("high_arousal_positive", "video", "u"),
    RowSpec("high_arousal_negative", "video", "u"),
    RowSpec("low_arousal_positive", "video", "u"),
    RowSpec("low_arousal_negative", "video", "u"),
    # acoustic frames of the class recording
    RowSpec("loudness", "audio", "t"),
    RowSpec("frequency", "audio", "t"),
    # discourse structure
    RowSpec("speaking_turns_per_min", "transcript", "none"),
    RowSpec("mean_sentence_length", "transcript", "t"),
    RowSpec("mean_speaking_turn_length", "transcript", "t"),
    RowSpec("student_speaking_times_per_min", "transcript", "t"),
    RowSpec("words_per_student_per_min", "transcript", "t"),
    RowSpec("sentences_per_student_per_min", "transcript", "t"),
    # student speech types per minute
    RowSpec("assertions_per_min", "transcript", "u"),
    RowSpec("questions_per_min", "transcript", "u"),
    RowSpec("exclamations_per_min", "transcript", "u"),
    # cognitive levels per minute
    RowSpec("remembering_per_min", "transcript", "u"),
    RowSpec("understanding_per_min", "transcript", "u"),
    RowSpec("applying_per_min", "transcript", "u"),
    RowSpec("analyzing_per_min", "transcript", "u"),
    RowSpec("evaluation_per_min", "transcript", "u"),
    RowSpec("creation_per_min", "transcript", "u"),
    # semantic positivity of student talk
    RowSpec("positive_sentiment", "semantic", "t"),
)


@dataclass
class ReportRow:
    variable: str
    section: str
    test: str
    status: str = "ok"            # ok | absent | degenerate | summary_only
    n1: int = 0
    n2: int = 0
    summary_a: float | None = None
    summary_b: float | None = None
    summary_kind: str = ""        # "median" | "mean" | "value"
    statistic: float | None = None
    p_value: float | None = None
    effect_size: float | None = None
    direction: str = ""           # "A>B" | "B>A" | "="
    note: str = ""

    def to_json(self) -> dict:
        return {
            "variable": self.variable, "section": self.section, "test": self.test,
            "status": self.status, "n1": self.n1, "n2": self.n2,
            "summary_kind": self.summary_kind,
            "summary_a": self.summary_a, "summary_b": self.summary_b,
            "statistic": self.statistic, "p_value": self.p_value,
            "effect_size": self.effect_size, "direction": self.direction,
            "note": self.note,
        }


@dataclass
class Report:
    label_a: str
    label_b: str
    rows: list[ReportRow] = field(default_factory=list)

    def row(self, variable: str) -> ReportRow:
        for r in self.rows:
            if r.variable == variable:
                return r
        raise KeyError(variable)

    def to_json(self) -> dict:
        return {
            "groups": {"a": self.label_a, "b": self.label_b},
            "rows": [r.to_json() for r in self.rows],
        }

    def to_text(self) -> str:
        header = f"{'variable':34} {'test':5} {'A':>10} {'B':>10} {'stat':>10} {'p':>8} {'effect':>8}  dir"
        lines = [f"engagement comparison: group A = {self.label_a}, group B = {self.label_b}",
                 header, "-" * len(header)]

        def fmt(v, nd=3):
            return "-" if v is None else f"{v:.{nd}f}"

        for r in self.rows:
            if r.status == "absent":
                lines.append(f"{r.variable:34} {r.test:5} {'absent':>10}")
                continue
            lines.append(
                f"{r.variable:34} {r.test:5} {fmt(r.summary_a):>10} {fmt(r.summary_b):>10}"
                f" {fmt(r.statistic):>10} {fmt(r.p_value):>8} {fmt(r.effect_size):>8}  {r.direction}")
        return "\n".join(lines) + "\n"


def _direction(a: float, b: float) -> str:
    if a > b:
        return "A>B"
    if b > a:
        return "B>A"
    return "="


def _compare(row: ReportRow, a: Sequence[float], b: Sequence[float]) -> None:
    """Run the row's declared test and fill the row in place."""
    row.n1, row.n2 = len(a), len(b)
    if row.test == "u":
        res = mann_whitney_u(list(a), list(b))
        row.summary_kind = "median"
        row.summary_a = res.summary_a["median"]
        row.summary_b = res.summary_b["median"]
    else:
        try:
            res = t_test(list(a), list(b))
        except ZeroVariance:
            row.status = "degenerate"
            row.summary_kind = "mean"
            row.summary_a = math.fsum(a) / len(a)
            row.summary_b = math.fsum(b) / len(b)
            row.direction = _direction(row.summary_a, row.summary_b)
            row.note = "zero variance in both groups"
            return
        row.summary_kind = "mean"
        row.summary_a = res.summary_a["mean"]
        row.summary_b = res.summary_b["mean"]
    row.statistic = res.statistic
    row.p_value = res.p_value
    row.effect_size = res.effect_size
    row.direction = _direction(row.summary_a, row.summary_b)
    if res.details.get("degenerate"):
        row.note = "identical samples"


# -- per-family sample extraction ----------------------------------------------------


def _video_samples(ds: GroupDataset) -> Callable[[str], list[float]]:
    agg = aggregate_behavior(ds.events, ds.windows)
    return lambda variable: duration_vector(agg, ds.students, variable)


def _audio_samples(ds: GroupDataset, baseline_fraction: float) -> dict[str, list[float]]:
    samples, rate = ds.audio  # type: ignore[misc]
    frame, hop = default_frames(rate)
    frames = short_time_energy(samples, frame, hop, rate)
    energies = [f.energy for f in frames]
    zcrs = [f.zcr for f in frames]
    n_base = max(1, int(len(frames) * baseline_fraction))
    norm_energy = baseline_normalize(energies, baseline_fraction)
    # loudness: change-from-baseline energy after the baseline segment;
    # frequency: raw zero-crossing rate over the same span
    return {
        "loudness": norm_energy[n_base:],
        "frequency": zcrs[n_base:],
    }


def _transcript_samples(ds: GroupDataset) -> dict[str, list[float]]:
    metrics = discourse_metrics(ds.transcript, ds.duration_min)
    out: dict[str, list[float]] = {"speaking_turns_per_min": [metrics.speaking_turns_per_min]}

    def vec(get) -> list[float]:
        values = []
        for sid in ds.students:
            sd = metrics.per_student.get(sid)
            values.append(get(sd) if sd is not None else 0.0)
        return values

    out["mean_sentence_length"] = vec(lambda sd: sd.mean_sentence_length)
    out["mean_speaking_turn_length"] = vec(lambda sd: sd.mean_turn_length)
    out["student_speaking_times_per_min"] = vec(lambda sd: sd.speaking_times_per_min)
    out["words_per_student_per_min"] = vec(lambda sd: sd.words_per_min)
    out["sentences_per_student_per_min"] = vec(lambda sd: sd.sentences_per_min)
    for stype in STUDENT_TYPES:
        plural = {"assertion": "assertions", "question": "questions",
                  "exclamation": "exclamations"}[stype]
        out[f"{plural}_per_min"] = vec(lambda sd, st=stype: sd.speech_per_min[st])
    for level in COGNITIVE_LEVELS:
        out[f"{level}_per_min"] = vec(lambda sd, lv=level: sd.cognitive_per_min[lv])
    return out


def _semantic_samples(ds: GroupDataset, provider: SentimentProvider) -> list[float]:
    by_student: dict[str, list[float]] = {}
    for utt in ds.transcript:
        if utt.student_id is None:
            continue
        by_student.setdefault(utt.student_id, []).append(provider.score(utt.text))
    values = []
    for sid in ds.students:
        scores = by_student.get(sid)
        values.append(sum(scores) / len(scores) if scores else 0.5)
    return values


def build_report(
    group_a: GroupDataset,
    group_b: GroupDataset,
    sentiment_provider: SentimentProvider | None = None,
    baseline_fraction: float = BASELINE_FRACTION,
) -> Report:
    """Compare two session datasets across the full variable manifest.

    Raises MissingVariable when a core input (behavior events or transcript)
    is missing from either group; optional inputs produce "absent" rows.
    """
    missing = []
    for label, ds in (("A", group_a), ("B", group_b)):
        if not ds.events:
            missing.append(f"group{label}/events.jsonl")
        if not ds.transcript:
            missing.append(f"group{label}/transcript.jsonl")
    if missing:
        raise MissingVariable(missing)

    provider = sentiment_provider or LexiconSentiment()
    report = Report(label_a=group_a.label, label_b=group_b.label)

    video_a = _video_samples(group_a)
    video_b = _video_samples(group_b)
    audio_ok = group_a.audio is not None and group_b.audio is not None
    audio_a = _audio_samples(group_a, baseline_fraction) if audio_ok else None
    audio_b = _audio_samples(group_b, baseline_fraction) if audio_ok else None
    text_a = _transcript_samples(group_a)
    text_b = _transcript_samples(group_b)
    sem_a = _semantic_samples(group_a, provider)
    sem_b = _semantic_samples(group_b, provider)

    for spec in MANIFEST:
        row = ReportRow(spec.variable, spec.section, spec.test)
        if spec.section == "video":
            _compare(row, video_a(spec.variable), video_b(spec.variable))
        elif spec.section == "audio":
            if not audio_ok:
                row.status = "absent"
                row.note = "no audio recording"
            else:
                _compare(row, audio_a[spec.variable], audio_b[spec.variable])
        elif spec.section == "semantic":
            _compare(row, sem_a, sem_b)
        elif spec.test == "none":
            row.status = "summary_only"
            row.summary_kind = "value"
            row.summary_a = text_a[spec.variable][0]
            row.summary_b = text_b[spec.variable][0]
            row.direction = _direction(row.summary_a, row.summary_b)
        else:
            _compare(row, text_a[spec.variable], text_b[spec.variable])
        report.rows.append(row)
    return report


def report_to_files(report: Report, out_dir) -> tuple[str, str]:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    text_path = out / "report.txt"
    json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    text_path.write_text(report.to_text(), encoding="utf-8")
    return str(json_path), str(text_path)
