"""Command-line entry point.

One process runs one subcommand. Exit codes: 0 success, 1 usage error,
2 data or validation error. Data outputs are written atomically and every
run that emits a machine-readable artifact also emits a run manifest
recording the resolved configuration and input file digests.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import Corpus, build_corpus, corpus_stats, group_label, load_metadata, load_utterances
from .errors import CorpusError, FairtrialError
from .grading import GradeHistogram, grade_trial_list
from .ioutil import open_write, write_json
from .metrics import DcfParams, evaluate
from .robustness import ExperimentGrid, det_band, run_grid, spread
from .scoring import ScoreSet, SimConfig, load_scores, simulate_scores, write_scores
from .trialgen import (
    GenerationConfig,
    TrialList,
    TrialPair,
    generate,
    generate_variants,
    read_trial_file,
    resolve_trials,
    write_trial_file,
)

DEFAULT_MIN_DIFF_PAIRS = 500
DEFAULT_EVAL_FPR_LEVELS = (0.01, 0.001)

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_MANUAL = "manual"


# ---------------------------------------------------------------------------
# Guideline validation


@dataclass(frozen=True)
class GuidelineCheck:
    """Outcome of one design-guideline check."""

    number: int
    name: str
    status: str
    detail: str

    def to_json_dict(self) -> dict:
        return {
            "guideline": self.number,
            "name": self.name,
            "status": self.status,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class GuidelineReport:
    checks: tuple[GuidelineCheck, ...]
    grade_profile: dict

    def passed(self) -> bool:
        return all(c.status != STATUS_FAIL for c in self.checks)

    def first_failure(self) -> Optional[GuidelineCheck]:
        for check in self.checks:
            if check.status == STATUS_FAIL:
                return check
        return None

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed(),
            "checks": [c.to_json_dict() for c in self.checks],
            "grade_profile": self.grade_profile,
        }


def _profile_summary(hist: GradeHistogram) -> str:
    total = hist.total()
    parts = [
        f"{kind}/{category} {100.0 * count / total:.1f}%"
        for kind, category, count in hist.to_table_rows()
    ]
    return "; ".join(parts)


def validate_guidelines(
    corpus: Corpus,
    pairs: Sequence[TrialPair],
    min_diff_pairs: int = DEFAULT_MIN_DIFF_PAIRS,
) -> GuidelineReport:
    """Check a trial list against the inclusive-design guidelines.

    Guidelines 1 to 4 are machine-checkable: balanced same/different counts
    per speaker, at least min_diff_pairs different pairs per speaker, equal
    totals across speakers, and equal grade proportions across speakers.
    Guideline 5 (grade profile suits the deployment scenario) needs human
    judgement, so the report only carries the profile. Pairs are attributed
    to the enroll-side speaker.

    Raises:
        CorpusError: the trial list is empty.
    """
    if not pairs:
        raise CorpusError("cannot validate an empty trial list")
    hist = GradeHistogram()
    for pair in pairs:
        hist.add(corpus.resolve(pair.enroll).speaker_id, pair.label, pair.grade)

    speakers = sorted(hist.by_speaker)
    same: dict[str, int] = {}
    diff: dict[str, int] = {}
    for sid in speakers:
        counts = hist.by_speaker[sid]
        same[sid] = sum(c for (label, _), c in counts.items() if label)
        diff[sid] = sum(c for (label, _), c in counts.items() if not label)

    checks = []

    offender = next((s for s in speakers if same[s] != diff[s]), None)
    if offender is None:
        detail = "every speaker has as many same pairs as different pairs"
        checks.append(GuidelineCheck(1, "balanced same/different pairs", STATUS_PASS, detail))
    else:
        detail = (
            f"speaker '{offender}' has {same[offender]} same but "
            f"{diff[offender]} different pairs"
        )
        checks.append(GuidelineCheck(1, "balanced same/different pairs", STATUS_FAIL, detail))

    offender = next((s for s in speakers if diff[s] < min_diff_pairs), None)
    if offender is None:
        detail = f"every speaker has at least {min_diff_pairs} different pairs"
        checks.append(GuidelineCheck(2, "enough different pairs", STATUS_PASS, detail))
    else:
        detail = (
            f"speaker '{offender}' has {diff[offender]} different pairs, "
            f"below the minimum of {min_diff_pairs}"
        )
        checks.append(GuidelineCheck(2, "enough different pairs", STATUS_FAIL, detail))

    first = speakers[0]
    first_total = same[first] + diff[first]
    offender = next(
        (s for s in speakers if same[s] + diff[s] != first_total), None
    )
    if offender is None:
        detail = f"all {len(speakers)} speakers have {first_total} pairs each"
        checks.append(GuidelineCheck(3, "equal pairs across speakers", STATUS_PASS, detail))
    else:
        detail = (
            f"speaker '{offender}' has {same[offender] + diff[offender]} pairs "
            f"while '{first}' has {first_total}"
        )
        checks.append(GuidelineCheck(3, "equal pairs across speakers", STATUS_FAIL, detail))

    def proportions(sid: str) -> dict:
        counts = hist.by_speaker[sid]
        total = sum(counts.values())
        return {key: Fraction(c, total) for key, c in counts.items()}

    reference = proportions(first)
    offender = next((s for s in speakers if proportions(s) != reference), None)
    if offender is None:
        detail = "every speaker has the same grade proportions"
        checks.append(GuidelineCheck(4, "equal grade proportions", STATUS_PASS, detail))
    else:
        detail = (
            f"speaker '{offender}' has a different grade mix than '{first}'"
        )
        checks.append(GuidelineCheck(4, "equal grade proportions", STATUS_FAIL, detail))

    checks.append(
        GuidelineCheck(
            5,
            "grade profile suits the target scenario",
            STATUS_MANUAL,
            _profile_summary(hist),
        )
    )
    return GuidelineReport(checks=tuple(checks), grade_profile=hist.to_json_dict())


# ---------------------------------------------------------------------------
# Run manifests


@dataclass(frozen=True)
class RunManifest:
    """Provenance record of one command invocation."""

    command: str
    config: dict
    inputs: dict
    version: str
    duration_seconds: float

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "version": self.version,
            "duration_seconds": self.duration_seconds,
        }


def file_digest(path: str) -> str:
    """64-bit content digest of a file, hex-encoded."""
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class _Timer:
    def __init__(self) -> None:
        self.start = time.monotonic()

    def manifest(self, command: str, config: dict, inputs: dict[str, str]) -> RunManifest:
        digested = {
            label: {"path": path, "digest": file_digest(path)}
            for label, path in inputs.items()
        }
        return RunManifest(
            command=command,
            config=config,
            inputs=digested,
            version=__version__,
            duration_seconds=round(time.monotonic() - self.start, 3),
        )


# ---------------------------------------------------------------------------
# Shared argument plumbing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage problems; this toolkit reserves 2
    for data errors, so usage problems surface as exceptions instead."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _int_list(text: str) -> list[int]:
    values = [int(part) for part in text.split(",") if part.strip() != ""]
    if not values:
        raise ValueError("empty list")
    return values


def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--meta", required=True, help="speaker metadata CSV/TSV")
    parser.add_argument("--utts", required=True, help="utterance list, one rel path per line")


def _add_dcf_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p-target", type=float, default=0.05, help="target prior")
    parser.add_argument("--c-miss", type=float, default=1.0, help="miss cost")
    parser.add_argument("--c-fa", type=float, default=1.0, help="false accept cost")


def _load_corpus(args: argparse.Namespace) -> Corpus:
    return build_corpus(load_metadata(args.meta), load_utterances(args.utts))


def _corpus_inputs(args: argparse.Namespace) -> dict[str, str]:
    return {"meta": args.meta, "utts": args.utts}


def _emit_json(doc: dict, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(_json_text(doc))
    else:
        write_json(out, doc)


def _json_text(doc: dict) -> str:
    import json

    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _sanitize(label: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in label)


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_generate(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    config = GenerationConfig(n=args.n, seed=args.seed)
    trial_list = generate(corpus, config, threads=args.threads)
    write_trial_file(trial_list, args.out)
    manifest = timer.manifest("generate", config.to_json_dict(), _corpus_inputs(args))
    sidecar = dict(trial_list.to_manifest_dict())
    sidecar["run"] = manifest.to_json_dict()
    write_json(f"{args.out}.manifest.json", sidecar)
    print(
        f"wrote {len(trial_list)} trials for {len(trial_list.included_speakers)} "
        f"speakers to {args.out}"
    )
    return 0


def _cmd_variants(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    config = GenerationConfig(n=args.n, seed=args.seeds[0])
    variants = generate_variants(corpus, config, args.seeds, threads=args.threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = {}
    for trial_list in variants:
        path = out_dir / f"trials_seed{trial_list.config.seed}.txt"
        write_trial_file(trial_list, path)
        entry = dict(trial_list.to_manifest_dict())
        entry["file"] = path.name
        entry["digest"] = file_digest(str(path))
        entries[str(trial_list.config.seed)] = entry
        print(f"wrote {len(trial_list)} trials to {path}")
    manifest = timer.manifest(
        "variants",
        {"n": args.n, "seeds": args.seeds, "group_policy": config.group_policy},
        _corpus_inputs(args),
    )
    write_json(out_dir / "run_manifest.json", {"run": manifest.to_json_dict(), "variants": entries})
    return 0


def _resolved_trials(args: argparse.Namespace, corpus: Corpus) -> list[TrialPair]:
    return resolve_trials(corpus, read_trial_file(args.trials))


def _cmd_grade(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    rows = read_trial_file(args.trials)
    hist = grade_trial_list(corpus, [(r.enroll, r.test) for r in rows])
    if args.table:
        for kind, category, count in hist.to_table_rows():
            print(f"{kind:<9} {category:<12} {count}")
        print(f"total     {'':<12} {hist.total()}")
        return 0
    inputs = dict(_corpus_inputs(args), trials=args.trials)
    manifest = timer.manifest("grade", {}, inputs)
    doc = dict(hist.to_json_dict())
    doc["run"] = manifest.to_json_dict()
    _emit_json(doc, args.out)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    inputs = _corpus_inputs(args)
    pairs = None
    if args.trials is not None:
        rows = read_trial_file(args.trials)
        pairs = [(r.enroll, r.test) for r in rows]
        inputs["trials"] = args.trials
    rows_out = corpus_stats(corpus, pairs)
    if args.table:
        header = f"{'nationality':<16} {'speakers':>8} {'same_pairs':>10} {'pairs/spk':>10} {'%trivial':>9}"
        print(header)
        for row in rows_out:
            print(
                f"{row.nationality:<16} {row.speakers:>8} {row.same_pairs:>10} "
                f"{row.pairs_per_speaker:>10.1f} {row.pct_trivial:>9.1f}"
            )
        return 0
    manifest = timer.manifest("stats", {}, inputs)
    doc = {
        "rows": [
            {
                "nationality": r.nationality,
                "speakers": r.speakers,
                "same_pairs": r.same_pairs,
                "pairs_per_speaker": r.pairs_per_speaker,
                "pct_trivial": r.pct_trivial,
            }
            for r in rows_out
        ],
        "run": manifest.to_json_dict(),
    }
    _emit_json(doc, args.out)
    return 0


def _cmd_simulate_scores(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    rows = read_trial_file(args.trials)
    config = SimConfig(
        embedding_dim=args.embedding_dim,
        speaker_scale=args.speaker_scale,
        channel_scale=args.channel_scale,
        noise_scale=args.noise_scale,
        seed=args.sim_seed,
    )
    scores = simulate_scores(corpus, [(r.enroll, r.test) for r in rows], config)
    write_scores(scores, args.out)
    inputs = dict(_corpus_inputs(args), trials=args.trials)
    manifest = timer.manifest("simulate-scores", config.to_json_dict(), inputs)
    write_json(f"{args.out}.manifest.json", {"run": manifest.to_json_dict(), "pairs": len(scores)})
    print(f"wrote {len(scores)} scores to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    pairs = _resolved_trials(args, corpus)
    scores = load_scores(args.scores)
    params = DcfParams(c_miss=args.c_miss, c_fa=args.c_fa, p_target=args.p_target)
    results = evaluate(corpus, pairs, scores, params)
    levels = tuple(args.fpr_levels)

    report = {
        "dcf_params": params.to_json_dict(),
        "groups": {
            group: result.to_json_dict(levels) for group, result in results.items()
        },
    }
    inputs = dict(_corpus_inputs(args), trials=args.trials, scores=args.scores)
    config = dict(params.to_json_dict(), fpr_levels=list(levels))
    manifest = timer.manifest("eval", config, inputs)
    if args.out is None:
        report["run"] = manifest.to_json_dict()
        _emit_json(report, None)
        return 0
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", report)
    for group, result in results.items():
        det_path = out_dir / f"det_{_sanitize(group)}.csv"
        with open_write(det_path) as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["threshold", "fpr", "fnr"])
            for threshold, fpr, fnr in result.det.points():
                writer.writerow([repr(threshold), repr(fpr), repr(fnr)])
    write_json(out_dir / "run_manifest.json", {"run": manifest.to_json_dict()})
    print(f"wrote evaluation report for {len(results)} group(s) to {out_dir}")
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    if args.groups is not None:
        groups = tuple(part.strip() for part in args.groups.split(",") if part.strip())
    else:
        groups = tuple(sorted(group_label(g) for g in corpus.group_index))
    grid = ExperimentGrid(groups=groups, pair_counts=tuple(args.n), seeds=tuple(args.seeds))
    params = DcfParams(c_miss=args.c_miss, c_fa=args.c_fa, p_target=args.p_target)
    sim = SimConfig(seed=args.sim_seed)

    def score_variant(c: Corpus, trial_list: TrialList) -> ScoreSet:
        return simulate_scores(c, trial_list.id_pairs(), sim)

    results = run_grid(corpus, grid, score_variant, params, threads=args.threads)
    doc = results.to_json_dict()
    doc["spread"] = {
        metric: spread(results, metric).to_json_dict()
        for metric in ("eer", "min_dcf")
    }
    bands = {}
    for group in grid.groups:
        for n in grid.pair_counts:
            if len(results.results_for(group, n)) >= 2:
                bands.setdefault(group, {})[str(n)] = det_band(results, group, n).to_json_dict()
    doc["det_bands"] = bands
    config = {
        "grid": grid.to_json_dict(),
        "dcf_params": params.to_json_dict(),
        "sim": sim.to_json_dict(),
    }
    manifest = timer.manifest("robustness", config, _corpus_inputs(args))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "grid.json", doc)
    with open_write(out_dir / "grid.csv") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["group", "n", "seed", "eer", "min_dcf", "n_target", "n_nontarget", "status"]
        )
        for row in results.to_table_rows():
            writer.writerow(row)
    write_json(out_dir / "run_manifest.json", {"run": manifest.to_json_dict()})
    ok = len(results.cells)
    failed = len(results.failures)
    print(f"grid complete: {ok} cell(s) evaluated, {failed} failed, results in {out_dir}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    timer = _Timer()
    corpus = _load_corpus(args)
    pairs = _resolved_trials(args, corpus)
    report = validate_guidelines(corpus, pairs, min_diff_pairs=args.min_diff_pairs)
    if args.table:
        for check in report.checks:
            print(f"guideline {check.number} [{check.status:>6}] {check.name}: {check.detail}")
    else:
        inputs = dict(_corpus_inputs(args), trials=args.trials)
        manifest = timer.manifest(
            "validate", {"min_diff_pairs": args.min_diff_pairs}, inputs
        )
        doc = dict(report.to_json_dict())
        doc["run"] = manifest.to_json_dict()
        _emit_json(doc, args.out)
    failure = report.first_failure()
    if failure is not None:
        print(
            f"error: guideline {failure.number} ({failure.name}) failed: {failure.detail}",
            file=sys.stderr,
        )
        return 2
    return 0


# ---------------------------------------------------------------------------
# Parser assembly and dispatch


def build_parser() -> _Parser:
    parser = _Parser(
        prog="fairtrial",
        description=(
            "Generate difficulty-graded speaker verification trial lists, "
            "evaluate score files, and measure evaluation robustness."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("generate", parents=[], help="generate a graded trial list")
    _add_corpus_args(p)
    p.add_argument("--n", type=int, default=500, help="pairs per speaker per kind")
    p.add_argument("--seed", type=int, default=0, help="generation seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("--out", required=True, help="output trial file")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("variants", help="generate seed variants of one configuration")
    _add_corpus_args(p)
    p.add_argument("--n", type=int, default=500, help="pairs per speaker per kind")
    p.add_argument("--seeds", type=_int_list, required=True, help="comma-separated seeds")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(func=_cmd_variants)

    p = sub.add_parser("grade", help="grade an existing trial list")
    _add_corpus_args(p)
    p.add_argument("--trials", required=True, help="trial file to grade")
    p.add_argument("--table", action="store_true", help="print a plain table instead of JSON")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_grade)

    p = sub.add_parser("stats", help="per-nationality same-pair statistics")
    _add_corpus_args(p)
    p.add_argument("--trials", default=None, help="restrict to pairs of this trial file")
    p.add_argument("--table", action="store_true", help="print a plain table instead of JSON")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("simulate-scores", help="score a trial list with the synthetic oracle")
    _add_corpus_args(p)
    p.add_argument("--trials", required=True, help="trial file to score")
    p.add_argument("--sim-seed", type=int, default=0, help="oracle seed")
    p.add_argument("--embedding-dim", type=int, default=SimConfig.embedding_dim)
    p.add_argument("--speaker-scale", type=float, default=SimConfig.speaker_scale)
    p.add_argument("--channel-scale", type=float, default=SimConfig.channel_scale)
    p.add_argument("--noise-scale", type=float, default=SimConfig.noise_scale)
    p.add_argument("--out", required=True, help="output score file")
    p.set_defaults(func=_cmd_simulate_scores)

    p = sub.add_parser("eval", help="evaluate a score file against a trial list")
    _add_corpus_args(p)
    p.add_argument("--trials", required=True, help="trial file")
    p.add_argument("--scores", required=True, help="score file")
    _add_dcf_args(p)
    p.add_argument(
        "--fpr-levels",
        type=lambda s: [float(x) for x in s.split(",") if x.strip()],
        default=list(DEFAULT_EVAL_FPR_LEVELS),
        help="comma-separated fpr levels for fnr readouts",
    )
    p.add_argument("--out", default=None, help="output directory (stdout JSON if omitted)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("robustness", help="metric spread across seeded trial-list variants")
    _add_corpus_args(p)
    p.add_argument("--groups", default=None, help="comma-separated group labels (default all)")
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated pair counts")
    p.add_argument("--seeds", type=_int_list, required=True, help="comma-separated seeds")
    p.add_argument("--sim-seed", type=int, default=0, help="synthetic scorer seed")
    _add_dcf_args(p)
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("validate", help="check a trial list against the design guidelines")
    _add_corpus_args(p)
    p.add_argument("--trials", required=True, help="trial file to validate")
    p.add_argument(
        "--min-diff-pairs",
        type=int,
        default=DEFAULT_MIN_DIFF_PAIRS,
        help="guideline 2 threshold",
    )
    p.add_argument("--table", action="store_true", help="print a plain table instead of JSON")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_validate)

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv and run one subcommand, mapping failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if getattr(args, "command", None) is None:
        print(parser.format_usage(), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except FairtrialError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
