"""Stability of evaluation metrics across seeded trial-list variants.

A grid run regenerates the trial list for every (group, pairs-per-speaker,
seed) cell, scores it, and evaluates it; the spread of a metric over the
seed axis measures how much the evaluation outcome depends on the sampling
luck of one particular list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .corpus import Corpus, group_label
from .errors import GenerationError, MetricError, ScoreError
from .metrics import DcfParams, MetricsResult, compute_result, fnr_at_fpr
from .scoring import ScoreSet
from .trialgen import GenerationConfig, TrialList, eligible_speakers, generate

ScoreProvider = Union[ScoreSet, Callable[[Corpus, TrialList], ScoreSet]]

REASON_NO_ELIGIBLE_SPEAKERS = "no-eligible-speakers"

_METRIC_NAMES = ("eer", "min_dcf", "min_dcf_raw")


@dataclass(frozen=True)
class ExperimentGrid:
    """Axes of a robustness experiment."""

    groups: tuple[str, ...]
    pair_counts: tuple[int, ...]
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        for name, axis in (
            ("groups", self.groups),
            ("pair_counts", self.pair_counts),
            ("seeds", self.seeds),
        ):
            if not axis:
                raise ValueError(f"{name} must be non-empty")
            if len(set(axis)) != len(axis):
                raise ValueError(f"{name} contains duplicates")
        if any(n < 1 for n in self.pair_counts):
            raise ValueError("pair counts must be positive")

    def to_json_dict(self) -> dict:
        return {
            "groups": list(self.groups),
            "pair_counts": list(self.pair_counts),
            "seeds": list(self.seeds),
        }


@dataclass
class GridResults:
    """Per-cell metric results of a grid run.

    cells maps (group, n, seed) to a MetricsResult; failures maps cells that
    produced no result to a short reason string; included_counts records how
    many speakers survived eligibility per (group, n).
    """

    grid: ExperimentGrid
    params: DcfParams
    cells: dict[tuple[str, int, int], MetricsResult] = field(default_factory=dict)
    failures: dict[tuple[str, int, int], str] = field(default_factory=dict)
    included_counts: dict[tuple[str, int], int] = field(default_factory=dict)

    def results_for(self, group: str, n: int) -> dict[int, MetricsResult]:
        """Seed-keyed results of one (group, n) cell row, grid seed order."""
        out = {}
        for seed in self.grid.seeds:
            result = self.cells.get((group, n, seed))
            if result is not None:
                out[seed] = result
        return out

    def to_json_dict(self, fpr_levels: Sequence[float] = ()) -> dict:
        groups: dict = {}
        for group in self.grid.groups:
            per_n: dict = {}
            for n in self.grid.pair_counts:
                per_seed: dict = {}
                for seed in self.grid.seeds:
                    key = (group, n, seed)
                    if key in self.cells:
                        per_seed[str(seed)] = self.cells[key].to_json_dict(fpr_levels)
                    elif key in self.failures:
                        per_seed[str(seed)] = {"failed": self.failures[key]}
                entry: dict = {"seeds": per_seed}
                if (group, n) in self.included_counts:
                    entry["included_speakers"] = self.included_counts[(group, n)]
                per_n[str(n)] = entry
            groups[group] = per_n
        return {
            "grid": self.grid.to_json_dict(),
            "dcf_params": self.params.to_json_dict(),
            "groups": groups,
        }

    def to_table_rows(self) -> list[tuple]:
        """Flat (group, n, seed, eer, min_dcf, n_target, n_nontarget, status)
        rows in grid order, one per cell."""
        rows = []
        for group in self.grid.groups:
            for n in self.grid.pair_counts:
                for seed in self.grid.seeds:
                    key = (group, n, seed)
                    if key in self.cells:
                        r = self.cells[key]
                        rows.append(
                            (group, n, seed, r.eer, r.min_dcf,
                             r.n_target, r.n_nontarget, "ok")
                        )
                    else:
                        reason = self.failures.get(key, "missing")
                        rows.append((group, n, seed, "", "", "", "", reason))
        return rows


def _restrict_corpus_groups(corpus: Corpus, groups: Sequence[str]) -> None:
    known = {group_label(g) for g in corpus.group_index}
    unknown = [g for g in groups if g not in known]
    if unknown:
        raise ValueError(f"unknown group label(s): {', '.join(sorted(unknown))}")


def run_grid(
    corpus: Corpus,
    grid: ExperimentGrid,
    score_provider: ScoreProvider,
    params: Optional[DcfParams] = None,
    threads: Optional[int] = None,
) -> GridResults:
    """Generate, score and evaluate one trial list per grid cell.

    score_provider is either a fixed ScoreSet covering every possible pair or
    a callable invoked per generated list. Cells whose generation or
    evaluation fails are recorded in failures instead of aborting the grid;
    a group with no eligible speakers at some n fails all its seeds at once.
    """
    params = params or DcfParams()
    _restrict_corpus_groups(corpus, grid.groups)
    results = GridResults(grid=grid, params=params)

    for group in grid.groups:
        group_speakers = {
            sid
            for g, sids in corpus.group_index.items()
            if group_label(g) == group
            for sid in sids
        }
        for n in grid.pair_counts:
            # Eligibility is seed-independent, so probe it once per cell row.
            probe = GenerationConfig(n=n, seed=grid.seeds[0])
            included, _ = eligible_speakers(
                corpus, probe, speakers=sorted(group_speakers)
            )
            results.included_counts[(group, n)] = len(included)
            if not included:
                for seed in grid.seeds:
                    results.failures[(group, n, seed)] = REASON_NO_ELIGIBLE_SPEAKERS
                continue
            for seed in grid.seeds:
                config = GenerationConfig(n=n, seed=seed)
                try:
                    trial_list = generate(
                        corpus, config, threads=threads,
                        speakers=sorted(group_speakers),
                    )
                except GenerationError as exc:
                    results.failures[(group, n, seed)] = str(exc)
                    continue
                if callable(score_provider):
                    scores = score_provider(corpus, trial_list)
                else:
                    scores = score_provider
                try:
                    targets, nontargets = [], []
                    for pair in trial_list.pairs:
                        value = scores.lookup(pair.enroll, pair.test)
                        if pair.label:
                            targets.append(value)
                        else:
                            nontargets.append(value)
                    results.cells[(group, n, seed)] = compute_result(
                        targets, nontargets, params
                    )
                except (ScoreError, MetricError) as exc:
                    results.failures[(group, n, seed)] = str(exc)
    return results


@dataclass(frozen=True)
class SpreadEntry:
    """Spread of one metric over the seed axis of one (group, n) cell row.

    relative_spread is (max - min) / min, or None when min is not positive
    (the ratio is undefined at zero and misleading below it).
    """

    group: str
    n: int
    values: tuple[float, ...]
    min: float
    max: float
    relative_spread: Optional[float]


@dataclass(frozen=True)
class SpreadStats:
    metric: str
    entries: tuple[SpreadEntry, ...]

    def mean_relative_spread(self) -> Optional[float]:
        defined = [e.relative_spread for e in self.entries if e.relative_spread is not None]
        if not defined:
            return None
        return float(np.mean(defined))

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "entries": [
                {
                    "group": e.group,
                    "n": e.n,
                    "values": list(e.values),
                    "min": e.min,
                    "max": e.max,
                    "relative_spread": e.relative_spread,
                }
                for e in self.entries
            ],
            "mean_relative_spread": self.mean_relative_spread(),
        }


def spread(results: GridResults, metric: str = "eer") -> SpreadStats:
    """Seed-axis spread of a metric for every (group, n) with >= 2 results.

    metric is one of eer, min_dcf, min_dcf_raw.
    """
    if metric not in _METRIC_NAMES:
        raise ValueError(f"metric must be one of {', '.join(_METRIC_NAMES)}")
    entries = []
    for group in results.grid.groups:
        for n in results.grid.pair_counts:
            per_seed = results.results_for(group, n)
            if len(per_seed) < 2:
                continue
            values = tuple(getattr(r, metric) for r in per_seed.values())
            lo, hi = min(values), max(values)
            rel = (hi - lo) / lo if lo > 0 else None
            entries.append(
                SpreadEntry(
                    group=group, n=n, values=values, min=lo, max=hi,
                    relative_spread=rel,
                )
            )
    return SpreadStats(metric=metric, entries=tuple(entries))


DEFAULT_FPR_LEVELS = tuple(np.logspace(np.log10(1e-3), np.log10(0.5), 30).tolist())


@dataclass(frozen=True)
class DetBand:
    """Envelope of DET curves over seeds: per fpr level, the lowest and
    highest fnr achieved by any seed's curve, plus the per-level mean."""

    group: str
    n: int
    fpr_levels: tuple[float, ...]
    fnr_low: tuple[float, ...]
    fnr_high: tuple[float, ...]
    fnr_mean: tuple[float, ...]
    n_curves: int

    def to_json_dict(self) -> dict:
        return {
            "group": self.group,
            "n": self.n,
            "fpr_levels": list(self.fpr_levels),
            "fnr_low": list(self.fnr_low),
            "fnr_high": list(self.fnr_high),
            "fnr_mean": list(self.fnr_mean),
            "n_curves": self.n_curves,
        }


def det_band(
    results: GridResults,
    group: str,
    n: int,
    fpr_levels: Sequence[float] = DEFAULT_FPR_LEVELS,
) -> DetBand:
    """Band of the (group, n) cell row's DET curves at fixed fpr levels.

    Raises:
        MetricError: fewer than two seeds produced a result.
    """
    per_seed = results.results_for(group, n)
    if len(per_seed) < 2:
        raise MetricError(
            f"det band for ('{group}', n={n}) needs results from at least "
            f"two seeds, have {len(per_seed)}"
        )
    levels = tuple(float(v) for v in fpr_levels)
    rows = []
    for result in per_seed.values():
        rows.append([fnr_at_fpr(result.det, level).value for level in levels])
    matrix = np.asarray(rows)
    return DetBand(
        group=group,
        n=n,
        fpr_levels=levels,
        fnr_low=tuple(matrix.min(axis=0).tolist()),
        fnr_high=tuple(matrix.max(axis=0).tolist()),
        fnr_mean=tuple(matrix.mean(axis=0).tolist()),
        n_curves=len(per_seed),
    )
