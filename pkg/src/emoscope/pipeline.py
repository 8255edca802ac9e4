"""Pipeline assembly: corpus -> matchers -> daily signals -> weekly
alignment -> validation battery -> report rows.

The CLI subcommands are thin wrappers around these functions; tests call
them directly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .config import PipelineConfig, expand_inputs
from .corpus import Gender, StreamCounts, stream_posts
from .errors import ConfigError, SignalError, StatError
from .lexicon import (
    ExplicitReportMatcher,
    MultiLexiconMatcher,
    PronounList,
    contains_third_person,
    load_lexicon,
    tokenize,
)
from .signals import (
    DailySignal,
    SurveySeries,
    WeeklySeries,
    gender_rescale,
    load_survey,
    paired_values,
    split_periods,
    stream_scores,
    weekly_align,
    write_daily_csv,
    write_weekly_csv,
)
from .stats import (
    correlate,
    dcca,
    dcca_statistic,
    kpss,
    lagged_regression_hac,
    percent_difference,
    permutation_test,
    chi2_two_proportions,
    significance_marker,
)

_MAX_ERROR_SAMPLES = 20


@dataclass
class SignalBundle:
    """Daily signals per (signal name, stratum) plus ingestion bookkeeping."""

    daily: dict[tuple[str, str], DailySignal]
    counts: StreamCounts
    score_counts: StreamCounts | None
    matched: dict[str, int]
    errors: list[str]
    signal_names: list[str]

    def stratum_signal(self, name: str, stratum: str) -> DailySignal:
        """One signal in one stratum; score signals only exist as 'all',
        and the rescaled stratum is derived (and cached) on demand."""
        if name.startswith("score_"):
            return self.daily[(name, "all")]
        if stratum == "rescaled":
            key = (name, "rescaled")
            if key not in self.daily:
                self.daily[key] = gender_rescale(
                    self.daily[(name, "male")], self.daily[(name, "female")], name=name
                )
            return self.daily[key]
        return self.daily[(name, stratum)]


def build_signals(cfg: PipelineConfig) -> SignalBundle:
    """Single pass over the corpus evaluating every configured matcher,
    then one pass over the score file. Equivalent to composing
    daily_fraction per matcher and stratum, but reads each post once."""
    lexicons = []
    for name, lex_path in cfg.lexicons:
        if not Path(lex_path).is_file():
            raise ConfigError(f"lexicon file not found: {lex_path}")
        lexicons.append(load_lexicon(lex_path, name=name))
    matcher = MultiLexiconMatcher(lexicons) if lexicons else None
    report_matcher = (
        ExplicitReportMatcher(cfg.templates, cfg.report_emotions) if cfg.report_emotions else None
    )
    n_lex = len(lexicons)
    corpus_signals = [lex.name for lex in lexicons] + [f"report_{e}" for e in cfg.report_emotions]
    report_bit = {e: n_lex + i for i, e in enumerate(cfg.report_emotions)}
    signal_names = corpus_signals + [f"score_{e}" for e in cfg.score_emotions]
    if not signal_names:
        raise ConfigError("no signals configured (lexicons, reports, or scores)")

    counts = StreamCounts()
    errors: list[str] = []

    def on_error(err):
        if len(errors) < _MAX_ERROR_SAMPLES:
            errors.append(str(err))

    width = 3 + 3 * len(corpus_signals)
    agg: dict[date, list[int]] = {}
    if corpus_signals:
        files = expand_inputs(cfg)
        tz = cfg.tz_offset_minutes
        for post in stream_posts(files, cfg.filter, counts, on_error):
            tokens = tokenize(post.text)
            mask = matcher.match_mask(tokens) if matcher is not None else 0
            if report_matcher is not None:
                for emotion in report_matcher.match(tokens):
                    mask |= 1 << report_bit[emotion]
            d = post.day(tz)
            row = agg.get(d)
            if row is None:
                row = agg[d] = [0] * width
            gender = post.author_gender
            gi = 1 if gender is Gender.MALE else 2 if gender is Gender.FEMALE else 0
            row[0] += 1
            if gi:
                row[gi] += 1
            while mask:
                low = mask & -mask
                mask ^= low
                base = 3 + 3 * (low.bit_length() - 1)
                row[base] += 1
                if gi:
                    row[base + gi] += 1
        if counts.kept == 0:
            raise SignalError("no posts left after filtering")

    daily: dict[tuple[str, str], DailySignal] = {}
    matched: dict[str, int] = {}
    for idx, name in enumerate(corpus_signals):
        base = 3 + 3 * idx
        for gi, stratum in ((0, "all"), (1, "male"), (2, "female")):
            per_day = {d: (row[base + gi], row[gi]) for d, row in agg.items() if row[gi] > 0}
            daily[(name, stratum)] = DailySignal.from_counts(name, per_day)
        matched[name] = sum(row[base] for row in agg.values())

    score_counts = None
    if cfg.score_emotions:
        if cfg.score_path is None or not Path(cfg.score_path).is_file():
            raise ConfigError(f"score file not found: {cfg.score_path}")
        score_counts = StreamCounts()
        acc: dict[str, dict[date, list[float]]] = {e: {} for e in cfg.score_emotions}
        for rec in stream_scores(cfg.score_path, score_counts, on_error):
            for emotion in cfg.score_emotions:
                value = rec.scores.get(emotion)
                if value is None:
                    continue
                if not 0.0 <= value <= 1.0:
                    score_counts.malformed += 1
                    continue
                row = acc[emotion].setdefault(rec.day, [0.0, 0.0])
                row[0] += value
                row[1] += 1.0
        for emotion in cfg.score_emotions:
            name = f"score_{emotion}"
            per_day = {d: (s, n) for d, (s, n) in acc[emotion].items()}
            daily[(name, "all")] = DailySignal.from_counts(name, per_day)
            matched[name] = int(sum(n for _, n in per_day.values()))

    return SignalBundle(
        daily=daily,
        counts=counts,
        score_counts=score_counts,
        matched=matched,
        errors=errors,
        signal_names=signal_names,
    )


def load_survey_map(cfg: PipelineConfig) -> dict[str, SurveySeries]:
    if cfg.survey_path is None:
        raise ConfigError("no survey configured ([survey] path)")
    if not Path(cfg.survey_path).is_file():
        raise ConfigError(f"survey file not found: {cfg.survey_path}")
    return {series.emotion: series for series in load_survey(cfg.survey_path)}


def survey_anchor_union(surveys) -> tuple[date, ...]:
    anchors: set[date] = set()
    for series in surveys:
        anchors.update(series.anchors)
    return tuple(sorted(anchors))


def strata_for(cfg: PipelineConfig, signal: str, extra_stratified: bool = False) -> list[str]:
    """Which strata a signal is evaluated in under the configured mode."""
    if signal.startswith("score_"):
        return ["all"]
    if cfg.gender_mode == "agnostic":
        strata = ["all"]
    elif cfg.gender_mode == "stratified":
        strata = ["male", "female"]
    else:
        strata = ["rescaled"]
    if extra_stratified and cfg.gender_mode != "stratified":
        strata += ["male", "female"]
    return strata


@dataclass
class ValidationRow:
    """One report row; None fields were skipped, with the reason in notes."""

    survey_emotion: str
    signal: str
    stratum: str
    n1: int | None = None
    r1: float | None = None
    r1_lo: float | None = None
    r1_hi: float | None = None
    r1_p: float | None = None
    n2: int | None = None
    r2: float | None = None
    r2_lo: float | None = None
    r2_hi: float | None = None
    r2_p: float | None = None
    n_full: int | None = None
    perm_p: float | None = None
    dcca_rho: float | None = None
    dcca_p: float | None = None
    beta: float | None = None
    beta_p: float | None = None
    kpss_stat: float | None = None
    kpss_band: str | None = None
    notes: list[str] = field(default_factory=list)


def validate_pair(
    survey: SurveySeries, weekly: WeeklySeries, stratum: str, cfg: PipelineConfig
) -> ValidationRow:
    """Full battery on one (survey emotion, signal, stratum) combination.

    Correlations are split at cfg.split_date; the permutation, DCCA, HAC
    and KPSS statistics use the whole pairwise-complete series. Every
    statistic failing its precondition is skipped with a recorded reason
    instead of failing the run.
    """
    row = ValidationRow(survey_emotion=survey.emotion, signal=weekly.name, stratum=stratum)

    def guard(label, fn):
        try:
            return fn()
        except (StatError, SignalError) as err:
            row.notes.append(f"{label} skipped: {err}")
            return None

    x, y, anchors = paired_values(weekly, survey)
    row.n_full = len(anchors)

    halves = guard("split", lambda: split_periods(weekly, survey, cfg.split_date))
    if halves is not None:
        for tag, (sig_part, sur_part) in zip(("historical", "prediction"), halves):
            xp, yp, ap = paired_values(sig_part, sur_part)
            n = len(ap)
            if tag == "historical":
                row.n1 = n
            else:
                row.n2 = n
            if n < 8:
                row.notes.append(f"{tag} period too short (n={n})")
                continue
            res = guard(f"{tag} r", lambda: correlate(xp, yp))
            if res is None:
                continue
            if tag == "historical":
                row.r1, row.r1_lo, row.r1_hi, row.r1_p = res.r, res.ci_low, res.ci_high, res.p
            else:
                row.r2, row.r2_lo, row.r2_hi, row.r2_p = res.r, res.ci_low, res.ci_high, res.p

    row.perm_p = guard(
        "permutation",
        lambda: permutation_test(x, y, n_perm=cfg.permutations, seed=cfg.seed),
    )
    dcca_result = guard("dcca", lambda: dcca(x, y, window=cfg.dcca_window))
    if dcca_result is not None:
        row.dcca_rho = dcca_result.rho
        row.dcca_p = guard(
            "dcca permutation",
            lambda: permutation_test(
                x,
                y,
                statistic=dcca_statistic(cfg.dcca_window),
                n_perm=cfg.permutations,
                seed=cfg.seed,
            ),
        )
    fit = guard("regression", lambda: lagged_regression_hac(y, x))
    if fit is not None:
        row.beta = fit.beta
        row.beta_p = fit.p_beta
        kp = guard("kpss", lambda: kpss(fit.residuals))
        if kp is not None:
            row.kpss_stat = kp.statistic
            row.kpss_band = kp.verdict_band
    return row


def run_validation(
    cfg: PipelineConfig, bundle: SignalBundle | None = None, extra_stratified: bool = False
) -> list[ValidationRow]:
    if not cfg.pairs:
        raise ConfigError("no survey/signal pairs configured ([survey] pairs)")
    surveys = load_survey_map(cfg)
    if bundle is None:
        bundle = build_signals(cfg)
    rows: list[ValidationRow] = []
    for survey_emotion, signal in cfg.pairs:
        if survey_emotion not in surveys:
            raise ConfigError(
                f"survey has no emotion {survey_emotion!r}; has {sorted(surveys)}"
            )
        survey = surveys[survey_emotion]
        for stratum in strata_for(cfg, signal, extra_stratified):
            daily = bundle.stratum_signal(signal, stratum)
            weekly = weekly_align(
                daily,
                survey.anchors,
                window_days=cfg.week_length,
                offset_days=cfg.week_offset,
                name=signal,
            )
            rows.append(validate_pair(survey, weekly, stratum, cfg))
    return rows


def _fmt(value, spec=".4g") -> str:
    return "" if value is None else format(value, spec)


_REPORT_COLUMNS = (
    "survey_emotion,signal,stratum,n1,r1,r1_lo,r1_hi,r1_p,r1_sig,"
    "n2,r2,r2_lo,r2_hi,r2_p,r2_sig,n_full,perm_p,dcca_rho,dcca_p,dcca_sig,"
    "beta,beta_p,beta_sig,kpss_stat,kpss_band,notes"
).split(",")


def write_report_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.survey_emotion,
                    row.signal,
                    row.stratum,
                    _fmt(row.n1, "d"),
                    _fmt(row.r1),
                    _fmt(row.r1_lo),
                    _fmt(row.r1_hi),
                    _fmt(row.r1_p),
                    "" if row.r1_p is None else significance_marker(row.r1_p),
                    _fmt(row.n2, "d"),
                    _fmt(row.r2),
                    _fmt(row.r2_lo),
                    _fmt(row.r2_hi),
                    _fmt(row.r2_p),
                    "" if row.r2_p is None else significance_marker(row.r2_p),
                    _fmt(row.n_full, "d"),
                    _fmt(row.perm_p),
                    _fmt(row.dcca_rho),
                    _fmt(row.dcca_p),
                    "" if row.dcca_p is None else significance_marker(row.dcca_p),
                    _fmt(row.beta),
                    _fmt(row.beta_p),
                    "" if row.beta_p is None else significance_marker(row.beta_p),
                    _fmt(row.kpss_stat),
                    row.kpss_band or "",
                    "; ".join(row.notes),
                ]
            )


def _corr_cell(r, lo, hi, p) -> str:
    if r is None:
        return "skipped"
    return f"{r:.3f}{significance_marker(p)} [{lo:.3f}, {hi:.3f}]"


def _stat_cell(value, p, digits=3) -> str:
    if value is None:
        return "skipped"
    cell = f"{value:.{digits}f}"
    if p is not None:
        cell += significance_marker(p)
    return cell


def format_report_table(rows) -> str:
    """Aligned text table with star notation (*** p<0.001, ** p<0.01,
    * p<0.05, middle dot p<0.1)."""
    header = [
        "pair",
        "n1",
        "r1 [95% CI]",
        "n2",
        "r2 [95% CI]",
        "perm p",
        "DCCA rho",
        "beta",
        "KPSS",
    ]
    body = []
    for row in rows:
        body.append(
            [
                f"{row.survey_emotion} / {row.signal} ({row.stratum})",
                "" if row.n1 is None else str(row.n1),
                _corr_cell(row.r1, row.r1_lo, row.r1_hi, row.r1_p),
                "" if row.n2 is None else str(row.n2),
                _corr_cell(row.r2, row.r2_lo, row.r2_hi, row.r2_p),
                _fmt(row.perm_p),
                _stat_cell(row.dcca_rho, row.dcca_p),
                _stat_cell(row.beta, row.beta_p),
                "skipped" if row.kpss_band is None else f"{row.kpss_stat:.3f} ({row.kpss_band})",
            ]
        )
    widths = [max(len(header[i]), *(len(line[i]) for line in body)) if body else len(header[i])
              for i in range(len(header))]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for line in body:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    notes = [
        f"note [{row.survey_emotion} / {row.signal} ({row.stratum})]: {note}"
        for row in rows
        for note in row.notes
    ]
    if notes:
        out.append("")
        out.extend(notes)
    return "\n".join(out) + "\n"


def write_plot_data(cfg: PipelineConfig, bundle: SignalBundle, path) -> None:
    """Tidy per-anchor CSV (one row per pair per anchor) for external plotting."""
    surveys = load_survey_map(cfg)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["survey_emotion", "signal", "stratum", "date", "period", "survey_percent", "signal_value"]
        )
        for survey_emotion, signal in cfg.pairs:
            survey = surveys[survey_emotion]
            for stratum in strata_for(cfg, signal):
                daily = bundle.stratum_signal(signal, stratum)
                weekly = weekly_align(
                    daily,
                    survey.anchors,
                    window_days=cfg.week_length,
                    offset_days=cfg.week_offset,
                    name=signal,
                )
                for anchor in survey.anchors:
                    period = "historical" if anchor < cfg.split_date else "prediction"
                    writer.writerow(
                        [
                            survey_emotion,
                            signal,
                            stratum,
                            anchor.isoformat(),
                            period,
                            _fmt(survey.percent.get(anchor), ".10g"),
                            _fmt(weekly.values.get(anchor), ".10g"),
                        ]
                    )


def write_signal_outputs(cfg: PipelineConfig, bundle: SignalBundle, out_dir: Path) -> list[str]:
    """Daily (and, when a survey is configured, weekly) CSVs for every
    signal and stratum; returns the written file names."""
    written: list[str] = []
    anchors: tuple[date, ...] = ()
    if cfg.survey_path is not None:
        anchors = survey_anchor_union(load_survey_map(cfg).values())
    for name in bundle.signal_names:
        for stratum in strata_for(cfg, name):
            daily = bundle.stratum_signal(name, stratum)
            daily_name = f"daily_{name}_{stratum}.csv"
            write_daily_csv(daily, out_dir / daily_name)
            written.append(daily_name)
            if anchors:
                weekly = weekly_align(
                    daily, anchors, window_days=cfg.week_length, offset_days=cfg.week_offset, name=name
                )
                weekly_name = f"weekly_{name}_{stratum}.csv"
                write_weekly_csv(weekly, out_dir / weekly_name)
                written.append(weekly_name)
    return written


def write_manifest(cfg: PipelineConfig, bundle: SignalBundle, written: list[str], path) -> None:
    manifest = {
        "counts": bundle.counts.as_dict(),
        "matched": dict(sorted(bundle.matched.items())),
        "error_samples": bundle.errors,
        "files": sorted(written),
        "config": {
            "inputs": list(cfg.inputs),
            "lexicons": {name: path for name, path in cfg.lexicons},
            "report_emotions": list(cfg.report_emotions),
            "score_emotions": list(cfg.score_emotions),
            "gender_mode": cfg.gender_mode,
            "filter": {
                "min_followers": cfg.filter.min_followers,
                "max_followers": cfg.filter.max_followers,
                "exclude_retweets": cfg.filter.exclude_retweets,
            },
            "week_length": cfg.week_length,
            "week_offset": cfg.week_offset,
            "tz_offset_minutes": cfg.tz_offset_minutes,
        },
    }
    if bundle.score_counts is not None:
        manifest["score_counts"] = bundle.score_counts.as_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class ProportionRow:
    """Third-person pronoun share among matching vs non-matching posts."""

    label: str
    with_k: int = 0
    with_n: int = 0
    without_k: int = 0
    without_n: int = 0
    frac_with: float | None = None
    frac_without: float | None = None
    pct_diff: float | None = None
    chi2: float | None = None
    p: float | None = None
    notes: list[str] = field(default_factory=list)


def finalize_proportion_row(row: ProportionRow) -> ProportionRow:
    if row.with_n == 0:
        row.notes.append("no matching posts")
        return row
    row.frac_with = row.with_k / row.with_n
    if row.without_n == 0:
        row.notes.append("no non-matching posts")
        return row
    row.frac_without = row.without_k / row.without_n
    try:
        row.pct_diff = percent_difference(row.frac_with, row.frac_without)
    except StatError as err:
        row.notes.append(f"percent difference skipped: {err}")
    try:
        row.chi2, row.p = chi2_two_proportions(row.with_k, row.with_n, row.without_k, row.without_n)
    except StatError as err:
        row.notes.append(f"chi2 skipped: {err}")
    return row


def thirdperson_rows(
    cfg: PipelineConfig, pronouns: PronounList | None = None
) -> tuple[StreamCounts, ProportionRow, list[ProportionRow]]:
    """One corpus pass counting pronoun incidence per lexicon stratum.

    Returns (ingestion counts, baseline row over all posts, per-lexicon rows).
    """
    if not cfg.lexicons:
        raise ConfigError("thirdperson needs at least one lexicon")
    lexicons = []
    for name, lex_path in cfg.lexicons:
        if not Path(lex_path).is_file():
            raise ConfigError(f"lexicon file not found: {lex_path}")
        lexicons.append(load_lexicon(lex_path, name=name))
    matcher = MultiLexiconMatcher(lexicons)
    vocab = pronouns if pronouns is not None else PronounList()
    counts = StreamCounts()
    names = [lex.name for lex in lexicons]
    table = {name: [0, 0, 0, 0] for name in names}  # with_k, with_n, without_k, without_n
    base_k = 0
    base_n = 0
    files = expand_inputs(cfg)
    for post in stream_posts(files, cfg.filter, counts):
        tokens = tokenize(post.text)
        pron = contains_third_person(tokens, vocab)
        mask = matcher.match_mask(tokens)
        base_n += 1
        if pron:
            base_k += 1
        for idx, name in enumerate(names):
            cell = table[name]
            if mask >> idx & 1:
                cell[1] += 1
                if pron:
                    cell[0] += 1
            else:
                cell[3] += 1
                if pron:
                    cell[2] += 1
    if base_n == 0:
        raise SignalError("no posts left after filtering")
    baseline = ProportionRow(label="all_posts", with_k=base_k, with_n=base_n)
    baseline.frac_with = base_k / base_n
    rows = [
        finalize_proportion_row(
            ProportionRow(label=name, with_k=c[0], with_n=c[1], without_k=c[2], without_n=c[3])
        )
        for name, c in table.items()
    ]
    return counts, baseline, rows


def read_proportion_counts(path) -> list[ProportionRow]:
    """Precomputed-counts mode: CSV label,with_k,with_n,without_k,without_n."""
    path = Path(path)
    rows: list[ProportionRow] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"label", "with_k", "with_n", "without_k", "without_n"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ConfigError(f"{path}: header must contain {sorted(required)}")
        for line_no, rec in enumerate(reader, 2):
            try:
                row = ProportionRow(
                    label=rec["label"],
                    with_k=int(rec["with_k"]),
                    with_n=int(rec["with_n"]),
                    without_k=int(rec["without_k"]),
                    without_n=int(rec["without_n"]),
                )
            except (TypeError, ValueError):
                raise ConfigError(f"{path}:{line_no}: counts must be integers") from None
            rows.append(finalize_proportion_row(row))
    if not rows:
        raise ConfigError(f"{path}: no count rows")
    return rows


def write_proportions_csv(baseline: ProportionRow | None, rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "label",
                "with_k",
                "with_n",
                "frac_with",
                "without_k",
                "without_n",
                "frac_without",
                "pct_difference",
                "chi2",
                "p",
                "notes",
            ]
        )
        everything = ([baseline] if baseline is not None else []) + list(rows)
        for row in everything:
            writer.writerow(
                [
                    row.label,
                    row.with_k,
                    row.with_n,
                    _fmt(row.frac_with, ".6g"),
                    row.without_k,
                    row.without_n,
                    _fmt(row.frac_without, ".6g"),
                    _fmt(row.pct_diff, ".6g"),
                    _fmt(row.chi2, ".6g"),
                    _fmt(row.p, ".4g"),
                    "; ".join(row.notes),
                ]
            )


def format_proportions_table(baseline: ProportionRow | None, rows) -> str:
    header = ["lexicon", "with pronouns | match", "with pronouns | no match", "% difference", "chi2 p"]
    body = []
    if baseline is not None:
        frac = "" if baseline.frac_with is None else f"{baseline.frac_with:.4f}"
        body.append([baseline.label, frac, "", "", ""])
    for row in rows:
        body.append(
            [
                row.label,
                "" if row.frac_with is None else f"{row.frac_with:.4f}",
                "" if row.frac_without is None else f"{row.frac_without:.4f}",
                "" if row.pct_diff is None else f"{row.pct_diff:+.1f}%",
                "" if row.p is None else f"{row.p:.3g}{significance_marker(row.p)}",
            ]
        )
    widths = [max(len(header[i]), *(len(line[i]) for line in body)) for i in range(len(header))]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for line in body:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    notes = [f"note [{row.label}]: {note}" for row in rows for note in row.notes]
    if notes:
        out.append("")
        out.extend(notes)
    return "\n".join(out) + "\n"
