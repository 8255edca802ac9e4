"""Daily aggregation, gender rescaling, and weekly survey alignment."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .corpus import StreamCounts, open_ndjson, Post
from .errors import RecordError, SignalError, SurveyError
from .lexicon import (
    ExplicitReportMatcher,
    Lexicon,
    PronounList,
    ReportTemplateSet,
    contains_third_person,
    matches_lexicon,
    tokenize,
)

GENDER_STRATA = ("all", "male", "female")


@dataclass
class DailySignal:
    """Date-indexed fractions or mean scores with their exact counts.

    values[d] == counts[d][0] / counts[d][1] for every present date; days
    with an empty denominator are absent (missing, never zero).
    """

    name: str
    values: dict[date, float] = field(default_factory=dict)
    counts: dict[date, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, name: str, counts: Mapping[date, tuple[float, float]]) -> "DailySignal":
        values: dict[date, float] = {}
        clean: dict[date, tuple[float, float]] = {}
        for d in sorted(counts):
            num, den = counts[d]
            if den <= 0:
                raise SignalError(f"{name}: nonpositive denominator on {d}")
            if num < 0 or num > den:
                raise SignalError(f"{name}: numerator outside [0, denominator] on {d}")
            values[d] = num / den
            clean[d] = (num, den)
        return cls(name=name, values=values, counts=clean)

    def dates(self) -> list[date]:
        return sorted(self.values)

    def __len__(self) -> int:
        return len(self.values)


def daily_fraction(
    posts: Iterable[Post],
    predicate: Callable[[Post], bool],
    gender: str = "all",
    name: str = "signal",
    tz_offset_minutes: int = 0,
) -> DailySignal:
    """Per-day fraction of posts passing `predicate` within a gender stratum.

    gender="all" keeps every post, unknown gender included; "male" and
    "female" restrict numerator and denominator to that stratum. Days
    with no posts in the stratum are missing from the result.
    """
    if gender not in GENDER_STRATA:
        raise SignalError(f"unknown gender stratum {gender!r}; have {GENDER_STRATA}")
    acc: dict[date, list[int]] = {}
    for post in posts:
        if gender != "all" and post.author_gender.value != gender:
            continue
        row = acc.setdefault(post.day(tz_offset_minutes), [0, 0])
        row[1] += 1
        if predicate(post):
            row[0] += 1
    return DailySignal.from_counts(name, {d: (num, den) for d, (num, den) in acc.items()})


def lexicon_predicate(lexicon: Lexicon) -> Callable[[Post], bool]:
    return lambda post: matches_lexicon(tokenize(post.text), lexicon)


def report_predicate(templates: ReportTemplateSet, emotion: str) -> Callable[[Post], bool]:
    matcher = ExplicitReportMatcher(templates, (emotion,))
    return lambda post: bool(matcher.match(tokenize(post.text)))


def pronoun_predicate(pronouns: PronounList | None = None) -> Callable[[Post], bool]:
    return lambda post: contains_third_person(tokenize(post.text), pronouns)


def gender_rescale(male: DailySignal, female: DailySignal, name: str | None = None) -> DailySignal:
    """Unweighted mean of the two per-gender signals on their common dates.

    Equal weighting deliberately ignores the corpus gender imbalance so
    each gender contributes half, like a demographically balanced panel.
    """
    common = sorted(set(male.values) & set(female.values))
    counts = {d: (male.values[d] + female.values[d], 2.0) for d in common}
    return DailySignal.from_counts(name or male.name, counts)


@dataclass(frozen=True)
class ScoreRecord:
    """Per-post classifier scores for one or more emotions."""

    id: str
    day: date
    scores: Mapping[str, float]


def parse_score_record(line: str, line_no: int | None = None, source: str | None = None) -> ScoreRecord:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as err:
        raise RecordError(f"invalid JSON ({err.msg})", line_no, source) from None
    if not isinstance(rec, dict):
        raise RecordError("record is not a JSON object", line_no, source)
    rid = rec.get("id")
    if rid is None:
        raise RecordError("missing id", line_no, source)
    raw_day = rec.get("date")
    if not isinstance(raw_day, str):
        raise RecordError("missing or non-string date", line_no, source)
    try:
        day = date.fromisoformat(raw_day)
    except ValueError:
        raise RecordError(f"unparseable date {raw_day!r}", line_no, source) from None
    scores = rec.get("scores")
    if not isinstance(scores, dict):
        raise RecordError("missing scores object", line_no, source)
    clean: dict[str, float] = {}
    for key, value in scores.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RecordError(f"score {key!r} is not a number", line_no, source)
        clean[key] = float(value)
    return ScoreRecord(id=str(rid), day=day, scores=clean)


def stream_scores(
    path,
    counts: StreamCounts | None = None,
    on_error: Callable[[RecordError], None] | None = None,
) -> Iterator[ScoreRecord]:
    """Yield score records from one NDJSON file; malformed lines are
    counted and skipped, like stream_posts."""
    if counts is None:
        counts = StreamCounts()
    name = str(path)
    with open_ndjson(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line or line.isspace():
                continue
            counts.records += 1
            try:
                rec = parse_score_record(line, line_no=line_no, source=name)
            except RecordError as err:
                counts.malformed += 1
                if on_error is not None:
                    on_error(err)
                continue
            counts.kept += 1
            yield rec


def daily_mean_score(
    records: Iterable[ScoreRecord],
    emotion: str,
    name: str | None = None,
    counts: StreamCounts | None = None,
) -> DailySignal:
    """Per-day mean of one emotion's scores.

    Records without that emotion are ignored; scores outside [0, 1] are
    skipped and counted as malformed rather than aborting the pass.
    """
    acc: dict[date, list[float]] = {}
    for rec in records:
        score = rec.scores.get(emotion)
        if score is None:
            continue
        if not 0.0 <= score <= 1.0:
            if counts is not None:
                counts.malformed += 1
            continue
        row = acc.setdefault(rec.day, [0.0, 0.0])
        row[0] += score
        row[1] += 1.0
    return DailySignal.from_counts(name or emotion, {d: (s, n) for d, (s, n) in acc.items()})


def _check_anchors(name: str, anchors: Sequence[date]) -> tuple[date, ...]:
    anchors = tuple(anchors)
    for a, b in zip(anchors, anchors[1:]):
        if b <= a:
            raise SignalError(f"{name}: anchors not strictly increasing ({a} then {b})")
    return anchors


@dataclass
class WeeklySeries:
    """Signal values aligned to survey field dates (anchors).

    Missing anchors are absent from `values`; `coverage` records which
    fraction of each window's days had data.
    """

    name: str
    anchors: tuple[date, ...]
    values: dict[date, float] = field(default_factory=dict)
    coverage: dict[date, float] = field(default_factory=dict)

    def __post_init__(self):
        self.anchors = _check_anchors(self.name, self.anchors)


def weekly_align(
    daily: DailySignal,
    anchors: Sequence[date],
    window_days: int = 7,
    offset_days: int = 0,
    name: str | None = None,
) -> WeeklySeries:
    """Mean of daily values over the window ending at each anchor.

    The default window is the 7 calendar days ending at (and including)
    the anchor; offset_days shifts the window back. Days missing from
    the daily signal shrink the mean and lower the recorded coverage; a
    fully empty window leaves the anchor missing.
    """
    if window_days < 1:
        raise SignalError(f"window_days must be >= 1, got {window_days}")
    if offset_days < 0:
        raise SignalError(f"offset_days must be >= 0, got {offset_days}")
    series = WeeklySeries(name=name or daily.name, anchors=tuple(anchors))
    for anchor in series.anchors:
        end = anchor - timedelta(days=offset_days)
        present = []
        for k in range(window_days):
            v = daily.values.get(end - timedelta(days=k))
            if v is not None:
                present.append(v)
        if not present:
            continue
        series.values[anchor] = sum(present) / len(present)
        series.coverage[anchor] = len(present) / window_days
    return series


@dataclass
class SurveySeries:
    """One emotion's weekly survey percentages over its field dates."""

    emotion: str
    anchors: tuple[date, ...]
    percent: dict[date, float] = field(default_factory=dict)

    def __post_init__(self):
        self.anchors = _check_anchors(self.emotion, self.anchors)
        for d, v in self.percent.items():
            if not 0.0 <= v <= 100.0:
                raise SurveyError(f"{self.emotion}: percent {v} on {d} outside [0, 100]")


def load_survey(path) -> list[SurveySeries]:
    """Load a long-form weekly survey CSV with header date,emotion,percent.

    Rows must be date-ordered within each emotion; duplicates are errors.
    Emotions keep first-appearance order.
    """
    path = Path(path)
    order: list[str] = []
    per: dict[str, list[tuple[date, float]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SurveyError(f"{path}: empty file")
        lowered = [h.strip().lower() for h in header]
        try:
            di = lowered.index("date")
            ei = lowered.index("emotion")
            pi = lowered.index("percent")
        except ValueError:
            raise SurveyError(f"{path}: header must name date, emotion and percent columns") from None
        for row_no, row in enumerate(reader, 2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) <= max(di, ei, pi):
                raise SurveyError(f"{path}:{row_no}: too few columns")
            try:
                d = date.fromisoformat(row[di].strip())
            except ValueError:
                raise SurveyError(f"{path}:{row_no}: bad date {row[di]!r}") from None
            emotion = row[ei].strip()
            if not emotion:
                raise SurveyError(f"{path}:{row_no}: empty emotion")
            try:
                percent = float(row[pi])
            except ValueError:
                raise SurveyError(f"{path}:{row_no}: bad percent {row[pi]!r}") from None
            if not 0.0 <= percent <= 100.0:
                raise SurveyError(f"{path}:{row_no}: percent {percent} outside [0, 100]")
            rows = per.setdefault(emotion, [])
            if not rows:
                order.append(emotion)
            elif d == rows[-1][0]:
                raise SurveyError(f"{path}:{row_no}: duplicate date {d} for {emotion}")
            elif d < rows[-1][0]:
                raise SurveyError(f"{path}:{row_no}: dates not increasing for {emotion}")
            rows.append((d, percent))
    if not per:
        raise SurveyError(f"{path}: no data rows")
    return [
        SurveySeries(
            emotion=emotion,
            anchors=tuple(d for d, _ in per[emotion]),
            percent=dict(per[emotion]),
        )
        for emotion in order
    ]


def _subset_weekly(series: WeeklySeries, anchors: tuple[date, ...]) -> WeeklySeries:
    return WeeklySeries(
        name=series.name,
        anchors=anchors,
        values={a: series.values[a] for a in anchors if a in series.values},
        coverage={a: series.coverage[a] for a in anchors if a in series.coverage},
    )


def _subset_survey(series: SurveySeries, anchors: tuple[date, ...]) -> SurveySeries:
    return SurveySeries(
        emotion=series.emotion,
        anchors=anchors,
        percent={a: series.percent[a] for a in anchors if a in series.percent},
    )


def split_periods(
    signal: WeeklySeries, survey: SurveySeries, split_date: date
) -> tuple[tuple[WeeklySeries, SurveySeries], tuple[WeeklySeries, SurveySeries]]:
    """Split an aligned pair into historical (anchor < split_date) and
    prediction (anchor >= split_date) halves; an empty half is an error."""
    lo_sig = _subset_weekly(signal, tuple(a for a in signal.anchors if a < split_date))
    hi_sig = _subset_weekly(signal, tuple(a for a in signal.anchors if a >= split_date))
    lo_sur = _subset_survey(survey, tuple(a for a in survey.anchors if a < split_date))
    hi_sur = _subset_survey(survey, tuple(a for a in survey.anchors if a >= split_date))
    if not lo_sig.anchors or not lo_sur.anchors:
        raise SignalError(f"empty historical period before {split_date}")
    if not hi_sig.anchors or not hi_sur.anchors:
        raise SignalError(f"empty prediction period from {split_date}")
    return (lo_sig, lo_sur), (hi_sig, hi_sur)


def paired_values(signal: WeeklySeries, survey: SurveySeries) -> tuple[np.ndarray, np.ndarray, list[date]]:
    """Pairwise-complete (signal, survey) arrays over the anchors both cover."""
    common = [a for a in survey.anchors if a in survey.percent and a in signal.values]
    x = np.array([signal.values[a] for a in common], dtype=float)
    y = np.array([survey.percent[a] for a in common], dtype=float)
    return x, y, common


def write_daily_csv(signal: DailySignal, path) -> None:
    """Daily export: date,value,numerator,denominator (dates ascending)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value", "numerator", "denominator"])
        for d in signal.dates():
            num, den = signal.counts[d]
            writer.writerow([d.isoformat(), f"{signal.values[d]:.12g}", f"{num:.12g}", f"{den:.12g}"])


def write_weekly_csv(series: WeeklySeries, path) -> None:
    """Weekly export: date,value,coverage; one row per anchor, value blank
    when the window had no data."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value", "coverage"])
        for anchor in series.anchors:
            if anchor in series.values:
                writer.writerow(
                    [anchor.isoformat(), f"{series.values[anchor]:.12g}", f"{series.coverage[anchor]:.12g}"]
                )
            else:
                writer.writerow([anchor.isoformat(), "", "0"])
