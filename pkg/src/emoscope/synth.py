"""Synthetic corpora, surveys, and score files with planted ground truth.

Everything here is deterministic for a fixed config: the same seed
produces byte-identical output files, which is what makes the end-to-end
recovery checks meaningful.
"""

from __future__ import annotations

import csv
import gzip
import io
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .lexicon import (
    DEMO_LEXICON_NAMES,
    MultiLexiconMatcher,
    THIRD_PERSON_PRONOUNS,
    demo_lexicon,
    tokenize,
)

_FILLER = (
    "morning",
    "coffee",
    "train",
    "weather",
    "weekend",
    "project",
    "garden",
    "dinner",
    "cycling",
    "meeting",
    "playlist",
    "novel",
    "recipe",
    "painting",
    "marathon",
    "puzzle",
    "holiday",
    "picnic",
    "museum",
    "kitchen",
)

PRONOUN_CHOICES = tuple(sorted(THIRD_PERSON_PRONOUNS))


def _default_prevalence() -> dict[str, tuple[float, float]]:
    return {
        "sadness": (0.040, 0.060),
        "anxiety": (0.050, 0.050),
        "positive": (0.090, 0.110),
    }


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator.

    `prevalence` maps emotion -> (male base, female base) daily match
    rates; a shared per-emotion latent mood (tanh-bounded AR(1)) moves
    each rate by at most `amplitude`, so base +- amplitude must stay
    strictly inside (0, 1). `step_changes` entries (emotion, day index,
    shift) add a level shift to both genders from that day on.
    """

    days: int = 120
    posts_per_day: int = 1000
    seed: int = 1
    start: date = date(2020, 6, 1)
    male_share: float = 0.639
    prevalence: Mapping[str, tuple[float, float]] = field(default_factory=_default_prevalence)
    phi: float = 0.9
    amplitude: float = 0.02
    decoy_fraction: float = 0.0
    pronoun_rate: float = 0.15
    pronoun_rate_emotional: float | None = None
    step_changes: tuple[tuple[str, int, float], ...] = ()
    terms: Mapping[str, Sequence[str]] | None = None

    def emotions(self) -> tuple[str, ...]:
        return tuple(self.prevalence)

    def validate(self) -> None:
        if self.days < 1:
            raise ConfigError(f"days must be >= 1, got {self.days}")
        if self.posts_per_day < 1:
            raise ConfigError(f"posts_per_day must be >= 1, got {self.posts_per_day}")
        if not 0.0 < self.male_share < 1.0:
            raise ConfigError(f"male_share must be in (0,1), got {self.male_share}")
        if not -1.0 < self.phi < 1.0:
            raise ConfigError(f"phi must be in (-1,1), got {self.phi}")
        if self.amplitude < 0.0:
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude}")
        if not 0.0 <= self.decoy_fraction < 1.0:
            raise ConfigError(f"decoy_fraction must be in [0,1), got {self.decoy_fraction}")
        for label, rate in (("pronoun_rate", self.pronoun_rate),
                            ("pronoun_rate_emotional", self.pronoun_rate_emotional)):
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{label} must be in [0,1], got {rate}")
        if not self.prevalence:
            raise ConfigError("at least one emotion required")
        for emotion, bases in self.prevalence.items():
            if len(bases) != 2:
                raise ConfigError(f"{emotion}: prevalence must be (male, female)")
            for gender, base in zip(("male", "female"), bases):
                if not (0.0 < base - self.amplitude and base + self.amplitude < 1.0):
                    raise ConfigError(
                        f"{emotion}/{gender}: base {base} with amplitude "
                        f"{self.amplitude} leaves (0, 1)"
                    )
        for emotion, day_idx, _shift in self.step_changes:
            if emotion not in self.prevalence:
                raise ConfigError(f"step change for unknown emotion {emotion!r}")
            if not 0 <= day_idx < self.days:
                raise ConfigError(f"step change day {day_idx} outside [0, {self.days})")
        if self.terms is not None:
            missing = [e for e in self.prevalence if e not in self.terms]
            if missing:
                raise ConfigError(f"no terms given for emotions {missing}")
        else:
            unknown = [e for e in self.prevalence if e not in DEMO_LEXICON_NAMES]
            if unknown:
                raise ConfigError(
                    f"emotions {unknown} have no demo lexicon; "
                    f"pass explicit terms or use {DEMO_LEXICON_NAMES}"
                )


@dataclass
class GroundTruth:
    """Planted daily prevalences per gender and the derived population truth."""

    start: date
    days: int
    emotions: tuple[str, ...]
    male: dict[str, np.ndarray]
    female: dict[str, np.ndarray]

    def population(self, emotion: str) -> np.ndarray:
        """Equal-weight mean of the per-gender prevalences."""
        return 0.5 * (self.male[emotion] + self.female[emotion])

    def dates(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(self.days)]

    def day_index(self, day: date) -> int:
        idx = (day - self.start).days
        if not 0 <= idx < self.days:
            raise ConfigError(f"{day} outside generated range")
        return idx

    def weekly_population(
        self, anchors: Sequence[date], window_days: int = 7
    ) -> dict[str, np.ndarray]:
        """Window means of the population truth ending at each anchor
        (window clipped at the start of the generated range)."""
        idxs = [self.day_index(a) for a in anchors]
        out: dict[str, np.ndarray] = {}
        for emotion in self.emotions:
            pop = self.population(emotion)
            out[emotion] = np.array(
                [pop[max(0, i - window_days + 1) : i + 1].mean() for i in idxs]
            )
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "emotion", "male", "female", "population"])
            for i, day in enumerate(self.dates()):
                for emotion in self.emotions:
                    writer.writerow(
                        [
                            day.isoformat(),
                            emotion,
                            repr(float(self.male[emotion][i])),
                            repr(float(self.female[emotion][i])),
                            repr(float(self.population(emotion)[i])),
                        ]
                    )


def _build_truth(cfg: SynthConfig, rng: np.random.Generator) -> GroundTruth:
    male: dict[str, np.ndarray] = {}
    female: dict[str, np.ndarray] = {}
    innovation_sd = math.sqrt(1.0 - cfg.phi * cfg.phi)  # unit stationary variance
    for emotion, (base_m, base_f) in cfg.prevalence.items():
        z = np.empty(cfg.days)
        z[0] = rng.normal(0.0, 1.0)
        shocks = rng.normal(0.0, innovation_sd, size=cfg.days - 1)
        for i in range(1, cfg.days):
            z[i] = cfg.phi * z[i - 1] + shocks[i - 1]
        mood = cfg.amplitude * np.tanh(z)
        male[emotion] = base_m + mood
        female[emotion] = base_f + mood
    for emotion, day_idx, shift in cfg.step_changes:
        male[emotion][day_idx:] += shift
        female[emotion][day_idx:] += shift
    for emotion in cfg.prevalence:
        for arr in (male[emotion], female[emotion]):
            if not np.all((arr > 0.0) & (arr < 1.0)):
                raise ConfigError(f"{emotion}: planted prevalence leaves (0, 1)")
    return GroundTruth(
        start=cfg.start,
        days=cfg.days,
        emotions=cfg.emotions(),
        male=male,
        female=female,
    )


def _term_pools(cfg: SynthConfig) -> dict[str, tuple[str, ...]]:
    if cfg.terms is not None:
        pools = {e: tuple(cfg.terms[e]) for e in cfg.prevalence}
    else:
        pools = {}
        for emotion in cfg.prevalence:
            lex = demo_lexicon(emotion)
            pools[emotion] = tuple(sorted(lex.exact_terms)) + tuple(
                stem + "ing" for stem in sorted(lex.prefix_terms)
            )
    for emotion, pool in pools.items():
        if not pool:
            raise ConfigError(f"{emotion}: empty term pool")
        for term in pool:
            if tokenize(term) != [term]:
                raise ConfigError(f"{emotion}: term {term!r} does not survive tokenization")
    return pools


def _check_vocabulary(cfg: SynthConfig, pools: Mapping[str, Sequence[str]]) -> None:
    """The planted rates are only exact if every word lands in precisely
    the intended lexicon, so refuse vocabularies with cross-matches."""
    if cfg.terms is not None:
        return  # custom terms: the caller owns lexicon consistency
    matcher = MultiLexiconMatcher([demo_lexicon(e) for e in cfg.prevalence])
    for word in _FILLER + PRONOUN_CHOICES:
        hit = matcher.match([word])
        if hit:
            raise ConfigError(f"filler word {word!r} matches lexicons {sorted(hit)}")
    for emotion, pool in pools.items():
        for term in pool:
            hit = matcher.match([term])
            if hit != {emotion}:
                raise ConfigError(f"term {term!r} matches {sorted(hit)}, expected only {emotion}")


@contextmanager
def _open_text_out(path):
    p = str(path)
    if p.endswith(".gz"):
        # mtime=0 keeps gzip output byte-identical across runs
        with open(p, "wb") as raw:
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                with io.TextIOWrapper(gz, encoding="utf-8", newline="\n") as out:
                    yield out
    else:
        with open(p, "w", encoding="utf-8", newline="\n") as out:
            yield out


def generate_corpus(cfg: SynthConfig, corpus_path, truth_path=None) -> GroundTruth:
    """Write an NDJSON corpus with planted per-day match rates.

    Emotion terms are injected per post by per-gender Bernoulli draws at
    the planted rate; a decoy_fraction of posts gets out-of-range
    follower counts so the default filter drops exactly that many.
    Returns the ground truth (also written to truth_path if given).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    truth = _build_truth(cfg, rng)
    pools = _term_pools(cfg)
    _check_vocabulary(cfg, pools)
    emotions = truth.emotions

    total = cfg.days * cfg.posts_per_day
    decoy_flags = np.zeros(total, dtype=bool)
    n_decoys = int(round(cfg.decoy_fraction * total))
    if n_decoys:
        decoy_flags[rng.choice(total, size=n_decoys, replace=False)] = True
    pron_rate_emotional = (
        cfg.pronoun_rate_emotional if cfg.pronoun_rate_emotional is not None else cfg.pronoun_rate
    )

    n_filler = len(_FILLER)
    n_pron = len(PRONOUN_CHOICES)
    with _open_text_out(corpus_path) as out:
        for day_idx in range(cfg.days):
            day_str = (cfg.start + timedelta(days=day_idx)).isoformat()
            p = cfg.posts_per_day
            base = day_idx * p
            is_male = rng.random(p) < cfg.male_share
            match = {}
            for emotion in emotions:
                rate = np.where(
                    is_male, truth.male[emotion][day_idx], truth.female[emotion][day_idx]
                )
                match[emotion] = rng.random(p) < rate
            any_match = np.zeros(p, dtype=bool)
            for emotion in emotions:
                any_match |= match[emotion]
            pron = rng.random(p) < np.where(any_match, pron_rate_emotional, cfg.pronoun_rate)
            followers = rng.integers(100, 100_001, size=p)
            decoy_low = rng.random(p) < 0.5
            low_vals = rng.integers(0, 100, size=p)
            high_vals = rng.integers(100_001, 1_000_001, size=p)
            seconds = rng.integers(0, 86_400, size=p)
            word_counts = rng.integers(2, 6, size=p)
            filler_idx = rng.integers(0, n_filler, size=(p, 5))
            term_idx = {e: rng.integers(0, len(pools[e]), size=p) for e in emotions}
            pron_idx = rng.integers(0, n_pron, size=p)
            for i in range(p):
                words = [_FILLER[j] for j in filler_idx[i, : word_counts[i]]]
                for emotion in emotions:
                    if match[emotion][i]:
                        words.append(pools[emotion][term_idx[emotion][i]])
                if pron[i]:
                    words.append(PRONOUN_CHOICES[pron_idx[i]])
                text = " ".join(words)
                if decoy_flags[base + i]:
                    fol = low_vals[i] if decoy_low[i] else high_vals[i]
                else:
                    fol = followers[i]
                sec = int(seconds[i])
                hh, rem = divmod(sec, 3600)
                mm, ss = divmod(rem, 60)
                gender = "male" if is_male[i] else "female"
                out.write(
                    f'{{"id":"p{base + i}","created_at":"{day_str}T{hh:02d}:{mm:02d}:{ss:02d}Z",'
                    f'"text":"{text}","author_gender":"{gender}","author_followers":{fol},'
                    f'"is_retweet":false}}\n'
                )
    if truth_path is not None:
        truth.write_csv(truth_path)
    return truth


def weekly_anchors(start: date, days: int, step: int = 7, first_offset: int = 6) -> list[date]:
    """Anchor dates every `step` days; the default puts the first anchor at
    the end of the first full week so every window is complete."""
    if days < first_offset + 1:
        raise ConfigError(f"need at least {first_offset + 1} days for one anchor")
    return [start + timedelta(days=i) for i in range(first_offset, days, step)]


def generate_survey(
    truth: GroundTruth,
    anchors: Sequence[date],
    path,
    emotions: Sequence[str] | None = None,
    respondents: int = 2000,
    seed: int = 0,
    window_days: int = 7,
) -> None:
    """Write a long-form survey CSV sampled from the planted truth.

    Each percent is a binomial draw (respondents trials) around the
    window mean of the population prevalence; respondents=0 writes the
    noise-free percent instead.
    """
    if respondents < 0:
        raise ConfigError(f"respondents must be >= 0, got {respondents}")
    emotions = tuple(emotions) if emotions is not None else truth.emotions
    unknown = [e for e in emotions if e not in truth.emotions]
    if unknown:
        raise ConfigError(f"unknown emotions {unknown}; truth has {truth.emotions}")
    anchors = list(anchors)
    if anchors != sorted(set(anchors)):
        raise ConfigError("anchors must be strictly increasing")
    weekly = truth.weekly_population(anchors, window_days)
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "emotion", "percent"])
        for k, anchor in enumerate(anchors):
            for emotion in emotions:
                p_true = float(weekly[emotion][k])
                if respondents > 0:
                    pct = 100.0 * rng.binomial(respondents, p_true) / respondents
                else:
                    pct = 100.0 * p_true
                writer.writerow([anchor.isoformat(), emotion, f"{pct:.10g}"])


def generate_scores(
    truth: GroundTruth,
    path,
    per_day: int = 200,
    noise_sd: float = 0.05,
    seed: int = 0,
    emotions: Sequence[str] | None = None,
) -> None:
    """Write a score NDJSON whose daily means track the planted population
    prevalence (independent noise per record, clipped to [0, 1])."""
    if per_day < 1:
        raise ConfigError(f"per_day must be >= 1, got {per_day}")
    if noise_sd < 0.0:
        raise ConfigError(f"noise_sd must be >= 0, got {noise_sd}")
    emotions = tuple(emotions) if emotions is not None else truth.emotions
    unknown = [e for e in emotions if e not in truth.emotions]
    if unknown:
        raise ConfigError(f"unknown emotions {unknown}; truth has {truth.emotions}")
    rng = np.random.default_rng(seed)
    population = {emotion: truth.population(emotion) for emotion in emotions}
    with _open_text_out(path) as out:
        for day_idx, day in enumerate(truth.dates()):
            day_str = day.isoformat()
            noise = rng.normal(0.0, noise_sd, size=(per_day, len(emotions))) if noise_sd else None
            for i in range(per_day):
                parts = []
                for k, emotion in enumerate(emotions):
                    value = float(population[emotion][day_idx])
                    if noise is not None:
                        value = min(1.0, max(0.0, value + float(noise[i, k])))
                    parts.append(f'"{emotion}":{value!r}')
                out.write(
                    f'{{"id":"s{day_idx}_{i}","date":"{day_str}","scores":{{{",".join(parts)}}}}}\n'
                )
