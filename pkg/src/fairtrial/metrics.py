"""Detection error tradeoff metrics over target/nontarget score sets.

The operating points of a score set are computed at every unique score plus
two sentinels (below the minimum and above the maximum), so the curve always
spans the accept-everything and reject-everything decisions. The decision
rule is "same speaker iff score >= threshold": ties accept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .corpus import Corpus, group_label
from .errors import CorpusError, MetricError, ScoreError
from .grading import PairLabel
from .scoring import ScoreSet
from .trialgen import TrialPair

OVERALL_GROUP = "overall"


@dataclass(frozen=True)
class DcfParams:
    """Detection cost weights: c_miss and c_fa price the two error types and
    p_target is the prior probability of a target trial."""

    c_miss: float = 1.0
    c_fa: float = 1.0
    p_target: float = 0.05

    def __post_init__(self) -> None:
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise ValueError("c_miss and c_fa must be positive")
        if not 0 < self.p_target < 1:
            raise ValueError("p_target must lie strictly inside (0, 1)")

    def to_json_dict(self) -> dict:
        return {"c_miss": self.c_miss, "c_fa": self.c_fa, "p_target": self.p_target}


@dataclass(frozen=True)
class DetCurve:
    """Operating points (threshold, fpr, fnr), threshold ascending."""

    thresholds: np.ndarray
    fpr: np.ndarray
    fnr: np.ndarray

    def __post_init__(self) -> None:
        t, fpr, fnr = self.thresholds, self.fpr, self.fnr
        if not (len(t) == len(fpr) == len(fnr)) or len(t) == 0:
            raise MetricError("curve arrays must be non-empty and equally long")
        if np.any(np.diff(t) < 0):
            raise MetricError("thresholds must be ascending")
        if np.any(np.diff(fpr) > 0) or np.any(np.diff(fnr) < 0):
            raise MetricError("fpr must be non-increasing and fnr non-decreasing")
        for name, arr in (("fpr", fpr), ("fnr", fnr)):
            if np.any(arr < 0) or np.any(arr > 1):
                raise MetricError(f"{name} values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.thresholds)

    def points(self) -> Iterable[tuple[float, float, float]]:
        return zip(self.thresholds.tolist(), self.fpr.tolist(), self.fnr.tolist())


def sweep(targets: Sequence[float], nontargets: Sequence[float]) -> DetCurve:
    """Compute the DET curve of a score set.

    fnr(t) is the fraction of targets strictly below t and fpr(t) the
    fraction of nontargets at or above t.

    Raises:
        MetricError: an empty or non-finite score side.
    """
    t = np.asarray(targets, dtype=float)
    s = np.asarray(nontargets, dtype=float)
    if t.size == 0:
        raise MetricError("target score list is empty")
    if s.size == 0:
        raise MetricError("nontarget score list is empty")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(s))):
        raise MetricError("scores must be finite")

    uniq = np.unique(np.concatenate([t, s]))
    thresholds = np.concatenate([[uniq[0] - 1.0], uniq, [uniq[-1] + 1.0]])
    t_sorted = np.sort(t)
    s_sorted = np.sort(s)
    fnr = np.searchsorted(t_sorted, thresholds, side="left") / t.size
    fpr = 1.0 - np.searchsorted(s_sorted, thresholds, side="left") / s.size
    return DetCurve(thresholds=thresholds, fpr=fpr, fnr=fnr)


def eer(det: DetCurve) -> tuple[float, float]:
    """Equal error rate and its threshold.

    fnr - fpr is non-decreasing along the curve; at the first sign change
    without an exact zero, the rate is interpolated linearly between the two
    adjacent operating points.
    """
    diff = det.fnr - det.fpr
    idx = int(np.searchsorted(diff, 0.0, side="left"))
    if idx >= len(diff):  # curve never reaches fnr >= fpr
        idx = len(diff) - 1
    if diff[idx] == 0.0:
        return float(det.fnr[idx]), float(det.thresholds[idx])
    if idx == 0:  # fnr > fpr everywhere
        return float(det.fnr[0]), float(det.thresholds[0])
    fpr1, fnr1, th1 = det.fpr[idx - 1], det.fnr[idx - 1], det.thresholds[idx - 1]
    fpr2, fnr2, th2 = det.fpr[idx], det.fnr[idx], det.thresholds[idx]
    # Crossing of the segment (fpr1, fnr1) -> (fpr2, fnr2) with fnr == fpr.
    frac = (fpr1 - fnr1) / ((fnr2 - fnr1) - (fpr2 - fpr1))
    value = fnr1 + frac * (fnr2 - fnr1)
    threshold = th1 + frac * (th2 - th1)
    return float(value), float(threshold)


def min_dcf(
    det: DetCurve, params: Optional[DcfParams] = None, normalize: bool = True
) -> tuple[float, float]:
    """Minimum detection cost and the smallest threshold achieving it.

    The cost at a threshold is c_miss * p_target * fnr + c_fa * (1 -
    p_target) * fpr. By default the minimum is normalized by the cost of the
    better trivial system, min(c_miss * p_target, c_fa * (1 - p_target)).
    """
    params = params or DcfParams()
    dcf = (
        params.c_miss * params.p_target * det.fnr
        + params.c_fa * (1.0 - params.p_target) * det.fpr
    )
    idx = int(np.argmin(dcf))  # first occurrence = smallest threshold on ties
    value = float(dcf[idx])
    if normalize:
        value /= min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target))
    return value, float(det.thresholds[idx])


class InterpolatedRate(NamedTuple):
    value: float
    extrapolated: bool


def fnr_at_fpr(det: DetCurve, fpr_level: float) -> InterpolatedRate:
    """Smallest fnr among operating points with fpr <= fpr_level,
    interpolating linearly when the level falls between achieved fprs.

    When no operating point reaches the level, returns the fnr of the most
    stringent point available, flagged as extrapolated.
    """
    if not 0 < fpr_level < 1:
        raise ValueError("fpr_level must lie strictly inside (0, 1)")
    qualifying = np.flatnonzero(det.fpr <= fpr_level)
    if qualifying.size == 0:
        # Most stringent point: lowest fpr, earliest threshold among ties.
        min_fpr = det.fpr[-1]
        idx = int(np.flatnonzero(det.fpr == min_fpr)[0])
        return InterpolatedRate(float(det.fnr[idx]), True)
    idx = int(qualifying[0])
    if det.fpr[idx] == fpr_level or idx == 0:
        return InterpolatedRate(float(det.fnr[idx]), False)
    fpr1, fnr1 = det.fpr[idx - 1], det.fnr[idx - 1]
    fpr2, fnr2 = det.fpr[idx], det.fnr[idx]
    frac = (fpr1 - fpr_level) / (fpr1 - fpr2)
    return InterpolatedRate(float(fnr1 + frac * (fnr2 - fnr1)), False)


@dataclass(frozen=True)
class MetricsResult:
    """Metrics of one trial-score population."""

    eer: float
    eer_threshold: float
    min_dcf: float  # normalized
    min_dcf_raw: float
    min_dcf_threshold: float
    det: DetCurve = field(repr=False)
    n_target: int
    n_nontarget: int

    def to_json_dict(self, fpr_levels: Sequence[float] = ()) -> dict:
        out = {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "min_dcf": self.min_dcf,
            "min_dcf_raw": self.min_dcf_raw,
            "min_dcf_threshold": self.min_dcf_threshold,
            "n_target": self.n_target,
            "n_nontarget": self.n_nontarget,
        }
        if fpr_levels:
            rates = {}
            for level in fpr_levels:
                rate = fnr_at_fpr(self.det, level)
                rates[repr(level)] = {
                    "fnr": rate.value,
                    "extrapolated": rate.extrapolated,
                }
            out["fnr_at_fpr"] = rates
        return out


def compute_result(
    targets: Sequence[float],
    nontargets: Sequence[float],
    params: Optional[DcfParams] = None,
) -> MetricsResult:
    """Sweep a score population and evaluate EER and minDCF on it."""
    params = params or DcfParams()
    det = sweep(targets, nontargets)
    eer_value, eer_th = eer(det)
    raw, dcf_th = min_dcf(det, params, normalize=False)
    norm = min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target))
    return MetricsResult(
        eer=eer_value,
        eer_threshold=eer_th,
        min_dcf=raw / norm,
        min_dcf_raw=raw,
        min_dcf_threshold=dcf_th,
        det=det,
        n_target=len(targets),
        n_nontarget=len(nontargets),
    )


def group_pairs(
    corpus: Corpus, pairs: Iterable[TrialPair]
) -> dict[str, list[TrialPair]]:
    """Partition trials by the enroll-side speaker's group label.

    Raises:
        CorpusError: an enroll utterance or its group cannot be resolved.
    """
    grouped: dict[str, list[TrialPair]] = {}
    for pair in pairs:
        speaker = corpus.speaker_of(pair.enroll)
        group = speaker.group
        if group is None:
            raise CorpusError(
                f"speaker '{speaker.speaker_id}' has no (gender, nationality) group"
            )
        grouped.setdefault(group_label(group), []).append(pair)
    return grouped


def _split_scores(
    pairs: Sequence[TrialPair], scores: ScoreSet
) -> tuple[list[float], list[float]]:
    targets, nontargets = [], []
    for pair in pairs:
        value = scores.lookup(pair.enroll, pair.test)
        (targets if pair.label is PairLabel.SAME else nontargets).append(value)
    return targets, nontargets


def evaluate(
    corpus: Corpus,
    pairs: Sequence[TrialPair],
    scores: ScoreSet,
    params: Optional[DcfParams] = None,
) -> dict[str, MetricsResult]:
    """Per-group metrics plus an "overall" entry pooling every trial.

    Raises:
        ScoreError: missing scores (lists up to 10 offending pairs).
        MetricError: a group with an empty target or nontarget side.
        CorpusError: unresolvable utterances or ungrouped speakers.
    """
    params = params or DcfParams()
    missing = [p for p in pairs if (p.enroll, p.test) not in scores]
    if missing:
        shown = ", ".join(f"({p.enroll}, {p.test})" for p in missing[:10])
        suffix = "" if len(missing) <= 10 else f" and {len(missing) - 10} more"
        raise ScoreError(f"missing scores for {len(missing)} pair(s): {shown}{suffix}")

    grouped = group_pairs(corpus, pairs)
    results: dict[str, MetricsResult] = {}
    for group in sorted(grouped):
        targets, nontargets = _split_scores(grouped[group], scores)
        if not targets or not nontargets:
            side = "target" if not targets else "nontarget"
            raise MetricError(f"group '{group}' has no {side} trials")
        results[group] = compute_result(targets, nontargets, params)
    targets, nontargets = _split_scores(list(pairs), scores)
    if not targets or not nontargets:
        side = "target" if not targets else "nontarget"
        raise MetricError(f"overall trial list has no {side} trials")
    results[OVERALL_GROUP] = compute_result(targets, nontargets, params)
    return results
