"""Difficulty grading of utterance pairs from speaker and recording attributes.

Same-speaker pairs are trivial when both utterances share a recording and
medium otherwise (recording identity is the proxy for channel and noise).
Different-speaker pairs get harder as the speakers share more attributes:
different gender and nationality is trivial, sharing only nationality is
easy, sharing only gender is medium, sharing both is hard. Different-speaker
pairs from one recording and pairs with unknown attributes have no defined
category and are rejected.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable

from .corpus import GENDER_UNKNOWN, Corpus
from .errors import GradingError


class PairLabel(IntEnum):
    """Trial label; integer values match the trial-file convention."""

    DIFFERENT = 0
    SAME = 1

    @property
    def key(self) -> str:
        return "same" if self is PairLabel.SAME else "different"


class Grade(IntEnum):
    """Difficulty category; ordered trivial < easy < medium < hard."""

    TRIVIAL = 1
    EASY = 2
    MEDIUM = 3
    HARD = 4

    @property
    def key(self) -> str:
        return f"cat{self.value}_{self.name.lower()}"


_DIFFERENT_SPEAKER_GRADES = {
    # (same_gender, same_nationality) -> grade
    (False, False): Grade.TRIVIAL,
    (False, True): Grade.EASY,
    (True, False): Grade.MEDIUM,
    (True, True): Grade.HARD,
}


def grade_pair(corpus: Corpus, utt_a: str, utt_b: str) -> tuple[PairLabel, Grade]:
    """Label and grade one utterance pair. Symmetric in its arguments.

    Raises:
        CorpusError: either path does not resolve.
        GradingError: identical utterances, unknown gender or nationality,
            or a different-speaker pair sharing a recording.
    """
    if utt_a == utt_b:
        raise GradingError(f"degenerate pair: '{utt_a}' compared with itself")
    a = corpus.resolve(utt_a)
    b = corpus.resolve(utt_b)
    spk_a = corpus.speakers[a.speaker_id]
    spk_b = corpus.speakers[b.speaker_id]
    for spk in (spk_a, spk_b):
        if spk.gender == GENDER_UNKNOWN:
            raise GradingError(f"speaker '{spk.speaker_id}' has unknown gender")
        if not spk.nationality:
            raise GradingError(f"speaker '{spk.speaker_id}' has no nationality")

    if a.speaker_id == b.speaker_id:
        if a.recording_id == b.recording_id:
            return PairLabel.SAME, Grade.TRIVIAL
        return PairLabel.SAME, Grade.MEDIUM

    if a.recording_id == b.recording_id:
        raise GradingError(
            f"different speakers share recording '{a.recording_id}': no defined category"
        )
    combo = (spk_a.gender == spk_b.gender, spk_a.nationality == spk_b.nationality)
    return PairLabel.DIFFERENT, _DIFFERENT_SPEAKER_GRADES[combo]


@dataclass
class GradeHistogram:
    """Counts of (label, grade) over a trial list, with per-speaker detail.

    Pairs are attributed to the enroll-side speaker (the first utterance).
    """

    totals: Counter = field(default_factory=Counter)
    by_speaker: dict[str, Counter] = field(default_factory=dict)

    def total(self) -> int:
        return sum(self.totals.values())

    def add(self, speaker_id: str, label: PairLabel, grade: Grade) -> None:
        key = (label, grade)
        self.totals[key] += 1
        self.by_speaker.setdefault(speaker_id, Counter())[key] += 1

    def to_json_dict(self) -> dict:
        out: dict[str, dict[str, int]] = {}
        for (label, grade), count in sorted(self.totals.items()):
            out.setdefault(label.key, {})[grade.key] = count
        return {"total": self.total(), "counts": out}

    def to_table_rows(self) -> list[tuple[str, str, int]]:
        """(kind, category, count) rows, sorted."""
        return [
            (label.key, grade.key, count)
            for (label, grade), count in sorted(self.totals.items())
        ]


def grade_trial_list(corpus: Corpus, pairs: Iterable[tuple[str, str]]) -> GradeHistogram:
    """Grade every (enroll, test) pair and tally the results.

    Raises whatever grade_pair raises for the first offending pair.
    """
    hist = GradeHistogram()
    for enroll, test in pairs:
        label, grade = grade_pair(corpus, enroll, test)
        hist.add(corpus.resolve(enroll).speaker_id, label, grade)
    return hist
