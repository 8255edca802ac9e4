"""Command-line interface: synth, signal, validate, thirdperson, auc.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from datetime import date
from importlib import resources
from pathlib import Path

from .config import (
    DEFAULT_DCCA_WINDOW,
    DEFAULT_PERMUTATIONS,
    GENDER_MODES,
    load_config,
)
from .errors import ConfigError, EmoscopeError, StatError
from .pipeline import (
    build_signals,
    format_proportions_table,
    format_report_table,
    read_proportion_counts,
    run_validation,
    thirdperson_rows,
    write_manifest,
    write_plot_data,
    write_proportions_csv,
    write_report_csv,
    write_signal_outputs,
)
from .signals import stream_scores
from .stats import roc_auc, roc_curve
from .corpus import StreamCounts
from .synth import SynthConfig, generate_corpus, generate_scores, generate_survey, weekly_anchors


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _date_arg(raw: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {raw!r}") from None


def _parse_emotion_spec(items) -> dict[str, tuple[float, float]]:
    out: dict[str, tuple[float, float]] = {}
    for item in items:
        try:
            name, _, rates = item.partition("=")
            male, _, female = rates.partition(":")
            out[name.strip()] = (float(male), float(female))
        except ValueError:
            raise ConfigError(f"--emotion expects NAME=MALE:FEMALE, got {item!r}") from None
        if not name.strip():
            raise ConfigError(f"--emotion expects NAME=MALE:FEMALE, got {item!r}")
    return out


def _parse_step_spec(items) -> tuple[tuple[str, int, float], ...]:
    steps = []
    for item in items:
        try:
            name, _, rest = item.partition("=")
            day, _, shift = rest.partition(":")
            steps.append((name.strip(), int(day), float(shift)))
        except ValueError:
            raise ConfigError(f"--step expects NAME=DAY:SHIFT, got {item!r}") from None
    return tuple(steps)


_PIPELINE_INI = """\
# Generated alongside the synthetic corpus; `emoscope validate --config
# pipeline.ini` runs the full battery against the planted survey.

[corpus]
input = {corpus}
min_followers = 100
max_followers = 100000
exclude_retweets = true

[lexicons]
{lexicon_lines}

[scores]
path = scores.ndjson
emotions = {emotion_list}

[survey]
path = survey.csv
pairs = {pairs}

[signals]
gender_mode = rescaled
week_length = 7
week_offset = 0

[validate]
split_date = {split_date}
permutations = 1000
seed = 1
dcca_window = 12

[output]
dir = out
"""


def cmd_synth(args) -> int:
    prevalence = _parse_emotion_spec(args.emotion) if args.emotion else None
    cfg = SynthConfig(
        days=args.days,
        posts_per_day=args.posts_per_day,
        seed=args.seed,
        start=args.start,
        male_share=args.male_share,
        phi=args.phi,
        amplitude=args.amplitude,
        decoy_fraction=args.decoy_fraction,
        pronoun_rate=args.pronoun_rate,
        pronoun_rate_emotional=args.pronoun_rate_emotional,
        step_changes=_parse_step_spec(args.step) if args.step else (),
        **({"prevalence": prevalence} if prevalence else {}),
    )
    cfg.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_name = "corpus.ndjson.gz" if args.gzip else "corpus.ndjson"

    truth = generate_corpus(cfg, out / corpus_name, truth_path=out / "truth.csv")
    anchors = weekly_anchors(cfg.start, cfg.days)
    generate_survey(
        truth, anchors, out / "survey.csv", respondents=args.respondents, seed=args.survey_seed
    )
    generate_scores(
        truth,
        out / "scores.ndjson",
        per_day=args.scores_per_day,
        noise_sd=args.score_noise,
        seed=args.score_seed,
    )
    lexdir = out / "lexicons"
    lexdir.mkdir(exist_ok=True)
    emotions = truth.emotions
    for emotion in emotions:
        text = (resources.files("emoscope") / "data" / f"{emotion}.txt").read_text("utf-8")
        (lexdir / f"{emotion}.txt").write_text(text, encoding="utf-8")

    n = len(anchors)
    split_idx = min(max(round(0.67 * n), 8), n - 8) if n >= 16 else n // 2
    pairs = ", ".join(f"{e}:{e}" for e in emotions)
    pairs += ", " + ", ".join(f"{e}:score_{e}" for e in emotions)
    ini = _PIPELINE_INI.format(
        corpus=corpus_name,
        lexicon_lines="\n".join(f"{e} = lexicons/{e}.txt" for e in emotions),
        emotion_list=", ".join(emotions),
        pairs=pairs,
        split_date=anchors[split_idx].isoformat(),
    )
    (out / "pipeline.ini").write_text(ini, encoding="utf-8")

    total = cfg.days * cfg.posts_per_day
    print(f"wrote {total} posts over {cfg.days} days to {out / corpus_name}")
    print(f"wrote survey ({n} anchors), scores, truth.csv, lexicons/, pipeline.ini in {out}")
    return 0


def _apply_overrides(cfg, args) -> None:
    if getattr(args, "output", None):
        cfg.output_dir = args.output
    if getattr(args, "gender_mode", None):
        cfg.gender_mode = args.gender_mode
    if getattr(args, "permutations", None) is not None:
        cfg.permutations = args.permutations
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "split_date", None) is not None:
        cfg.split_date = args.split_date
    if getattr(args, "dcca_window", None) is not None:
        cfg.dcca_window = args.dcca_window
    cfg.validate()


def cmd_signal(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = build_signals(cfg)
    written = write_signal_outputs(cfg, bundle, out)
    write_manifest(cfg, bundle, written, out / "manifest.json")
    c = bundle.counts
    print(f"records={c.records} parsed={c.parsed} malformed={c.malformed} "
          f"filtered={c.dropped} kept={c.kept}")
    for name in bundle.signal_names:
        print(f"matched[{name}] = {bundle.matched[name]}")
    print(f"wrote {len(written)} signal files + manifest.json to {out}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    if cfg.permutations < 1000:
        raise ConfigError(f"validation runs need permutations >= 1000, got {cfg.permutations}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = build_signals(cfg)
    rows = run_validation(cfg, bundle, extra_stratified=args.stratified)
    write_report_csv(rows, out / "report.csv")
    table = format_report_table(rows)
    (out / "report.txt").write_text(table, encoding="utf-8")
    if args.plot_data:
        write_plot_data(cfg, bundle, out / "plot_data.csv")
    sys.stdout.write(table)
    print(f"wrote report.csv and report.txt to {out}")
    return 0


def cmd_thirdperson(args) -> int:
    if (args.config is None) == (args.counts is None):
        raise ConfigError("thirdperson needs exactly one of --config or --counts")
    if args.counts is not None:
        rows = read_proportion_counts(args.counts)
        baseline = None
        out = Path(args.output or ".")
    else:
        cfg = load_config(args.config)
        if args.output:
            cfg.output_dir = args.output
        counts, baseline, rows = thirdperson_rows(cfg)
        out = Path(cfg.output_dir)
        print(f"records={counts.records} malformed={counts.malformed} "
              f"filtered={counts.dropped} kept={counts.kept}")
    out.mkdir(parents=True, exist_ok=True)
    write_proportions_csv(baseline, rows, out / "thirdperson.csv")
    sys.stdout.write(format_proportions_table(baseline, rows))
    print(f"wrote thirdperson.csv to {out}")
    return 0


def _read_labels(path) -> dict[str, dict[str, int]]:
    labels: dict[str, dict[str, int]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "emotion", "label"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ConfigError(f"{path}: header must contain {sorted(required)}")
        for line_no, rec in enumerate(reader, 2):
            raw = (rec["label"] or "").strip()
            if raw not in ("0", "1"):
                raise ConfigError(f"{path}:{line_no}: label must be 0 or 1, got {raw!r}")
            labels.setdefault(rec["emotion"].strip(), {})[rec["id"].strip()] = int(raw)
    if not labels:
        raise ConfigError(f"{path}: no label rows")
    return labels


def cmd_auc(args) -> int:
    labels = _read_labels(args.labels)
    emotions = list(args.emotions) if args.emotions else sorted(labels)
    unknown = [e for e in emotions if e not in labels]
    if unknown:
        raise ConfigError(f"no labels for emotions {unknown}; have {sorted(labels)}")
    scores: dict[str, dict[str, float]] = {e: {} for e in emotions}
    counts = StreamCounts()
    for rec in stream_scores(args.scores, counts):
        for emotion in emotions:
            value = rec.scores.get(emotion)
            if value is not None:
                scores[emotion][rec.id] = value
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    computed = 0
    for emotion in emotions:
        wanted = labels[emotion]
        got = scores[emotion]
        ids = [i for i in wanted if i in got]
        missing = len(wanted) - len(ids)
        ys = [wanted[i] for i in ids]
        xs = [got[i] for i in ids]
        try:
            auc = roc_auc(ys, xs)
        except StatError as err:
            summary.append((emotion, len(ids), sum(ys), len(ys) - sum(ys), missing, None, str(err)))
            print(f"{emotion}: skipped ({err})")
            continue
        fpr, tpr, thresholds = roc_curve(ys, xs)
        with open(out / f"roc_{emotion}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fpr", "tpr", "threshold"])
            for f, t, th in zip(fpr, tpr, thresholds):
                writer.writerow([f"{f:.10g}", f"{t:.10g}", f"{th:.10g}"])
        summary.append((emotion, len(ids), sum(ys), len(ys) - sum(ys), missing, auc, ""))
        print(f"{emotion}: AUC = {auc:.4f} (n={len(ids)}, missing scores={missing})")
        computed += 1
    with open(out / "auc.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["emotion", "n", "n_pos", "n_neg", "missing_scores", "auc", "notes"])
        for emotion, n, npos, nneg, missing, auc, note in summary:
            writer.writerow(
                [emotion, n, npos, nneg, missing, "" if auc is None else f"{auc:.10g}", note]
            )
    if computed == 0:
        raise StatError("no emotion had scores with both classes present")
    print(f"wrote auc.csv and {computed} ROC curve files to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="emoscope",
        description="Build emotion time series from social-media corpora and "
        "validate them against weekly surveys.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted truth",
                       formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--days", type=int, default=120, help="number of generated days")
    p.add_argument("--posts-per-day", type=int, default=1000, help="posts per day")
    p.add_argument("--seed", type=int, default=1, help="corpus RNG seed")
    p.add_argument("--start", type=_date_arg, default=date(2020, 6, 1), help="first day (ISO)")
    p.add_argument("--male-share", type=float, default=0.639, help="share of male-authored posts")
    p.add_argument("--phi", type=float, default=0.9, help="AR(1) coefficient of the latent mood")
    p.add_argument("--amplitude", type=float, default=0.02,
                   help="max prevalence deflection of the latent mood")
    p.add_argument("--emotion", action="append", metavar="NAME=MALE:FEMALE",
                   help="emotion with per-gender base rates (repeatable); "
                        "default: sadness=0.04:0.06 anxiety=0.05:0.05 positive=0.09:0.11")
    p.add_argument("--decoy-fraction", type=float, default=0.0,
                   help="fraction of posts given out-of-range follower counts")
    p.add_argument("--pronoun-rate", type=float, default=0.15,
                   help="third-person pronoun rate in non-matching posts")
    p.add_argument("--pronoun-rate-emotional", type=float, default=None,
                   help="pronoun rate in matching posts (default: same as --pronoun-rate)")
    p.add_argument("--step", action="append", metavar="NAME=DAY:SHIFT",
                   help="level shift of one emotion from a day index on (repeatable)")
    p.add_argument("--respondents", type=int, default=2000,
                   help="survey respondents per week (0 = noise-free survey)")
    p.add_argument("--survey-seed", type=int, default=0, help="survey RNG seed")
    p.add_argument("--scores-per-day", type=int, default=200, help="score records per day")
    p.add_argument("--score-noise", type=float, default=0.05, help="score noise sd")
    p.add_argument("--score-seed", type=int, default=0, help="score RNG seed")
    p.add_argument("--gzip", action="store_true", help="gzip the corpus file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("signal", help="build daily/weekly signal CSVs", formatter_class=fmt)
    p.add_argument("--config", required=True, help="pipeline INI file")
    p.add_argument("--output", default=None, help="override [output] dir")
    p.add_argument("--gender-mode", choices=GENDER_MODES, default=None,
                   help="override [signals] gender_mode")
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("validate", help="run the full validation battery", formatter_class=fmt)
    p.add_argument("--config", required=True, help="pipeline INI file")
    p.add_argument("--output", default=None, help="override [output] dir")
    p.add_argument("--gender-mode", choices=GENDER_MODES, default=None,
                   help="override [signals] gender_mode")
    p.add_argument("--permutations", type=int, default=None,
                   help=f"override permutation count (config default {DEFAULT_PERMUTATIONS})")
    p.add_argument("--seed", type=int, default=None, help="override permutation seed")
    p.add_argument("--split-date", type=_date_arg, default=None,
                   help="override historical/prediction split (config default 2020-11-01)")
    p.add_argument("--dcca-window", type=int, default=None,
                   help=f"override DCCA window (config default {DEFAULT_DCCA_WINDOW})")
    p.add_argument("--stratified", action="store_true",
                   help="add per-gender rows to the report")
    p.add_argument("--plot-data", action="store_true",
                   help="also write tidy per-anchor plot_data.csv")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("thirdperson", help="third-person pronoun proportions per lexicon",
                       formatter_class=fmt)
    p.add_argument("--config", default=None, help="pipeline INI file (corpus mode)")
    p.add_argument("--counts", default=None,
                   help="CSV label,with_k,with_n,without_k,without_n (precomputed-counts mode)")
    p.add_argument("--output", default=None, help="output directory")
    p.set_defaults(func=cmd_thirdperson)

    p = sub.add_parser("auc", help="ROC/AUC of a score file against binary labels",
                       formatter_class=fmt)
    p.add_argument("--scores", required=True, help="score NDJSON file")
    p.add_argument("--labels", required=True, help="labels CSV (id,emotion,label)")
    p.add_argument("--output", default=".", help="output directory")
    p.add_argument("--emotions", nargs="*", default=None,
                   help="emotions to evaluate (default: all labelled)")
    p.set_defaults(func=cmd_auc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"config error: file not found: {err.filename or err}", file=sys.stderr)
        return 1
    except EmoscopeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())
