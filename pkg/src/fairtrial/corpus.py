"""Speaker/utterance metadata ingestion and the in-memory corpus model.

A corpus joins a speaker metadata table (speaker_id, gender, nationality)
with an utterance inventory (one relative path per line, shaped
``<speaker_id>/<recording_id>/<file>``). Utterances are keyed by their
relative path, which is also the key used in trial and score files.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import CorpusError, DuplicateKeyError, FormatError
from .ioutil import TextSource, open_text, open_write

logger = logging.getLogger(__name__)

GENDER_MALE = "male"
GENDER_FEMALE = "female"
GENDER_UNKNOWN = "unknown"

_REQUIRED_COLUMNS = ("speaker_id", "gender", "nationality")

GroupKey = tuple[str, str]  # (gender, nationality)


def normalize_gender(raw: str) -> str:
    g = raw.strip().lower()
    if g in ("m", "male"):
        return GENDER_MALE
    if g in ("f", "female"):
        return GENDER_FEMALE
    return GENDER_UNKNOWN


def normalize_nationality(raw: str) -> str:
    """Lowercase and trim only; label harmonization (UK vs United Kingdom)
    is the caller's responsibility."""
    return raw.strip().lower()


@dataclass(frozen=True)
class Speaker:
    """One speaker; gender and nationality are normalized on construction,
    whatever the construction path."""

    speaker_id: str
    gender: str
    nationality: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "gender", normalize_gender(self.gender))
        object.__setattr__(self, "nationality", normalize_nationality(self.nationality))

    @property
    def group(self) -> Optional[GroupKey]:
        """(gender, nationality) stratum, or None when ungroupable
        (unknown gender or empty nationality)."""
        if self.gender == GENDER_UNKNOWN or not self.nationality:
            return None
        return (self.gender, self.nationality)


@dataclass(frozen=True)
class Utterance:
    utterance_id: str  # equals rel_path
    speaker_id: str
    recording_id: str
    rel_path: str


def group_label(group: GroupKey) -> str:
    """Render a (gender, nationality) key as the string used in reports."""
    return f"{group[0]}:{group[1]}"


def load_metadata(source: TextSource) -> list[Speaker]:
    """Parse a speaker metadata table.

    The delimiter (comma or tab) is auto-detected from the header line.
    Required columns: speaker_id, gender, nationality; extras are ignored.
    Gender strings m/male and f/female map to the two known genders, anything
    else to unknown. Nationality is lowercased and trimmed.

    Raises:
        FormatError: missing required column.
        DuplicateKeyError: repeated speaker_id.
    """
    with open_text(source) as f:
        header_line = f.readline()
        if not header_line.strip():
            raise FormatError("metadata source is empty")
        delimiter = "\t" if "\t" in header_line else ","
        header = [h.strip() for h in header_line.rstrip("\n").split(delimiter)]
        for col in _REQUIRED_COLUMNS:
            if col not in header:
                raise FormatError(f"metadata is missing required column '{col}'")
        reader = csv.DictReader(f, fieldnames=header, delimiter=delimiter)
        speakers: list[Speaker] = []
        seen: set[str] = set()
        for row in reader:
            speaker_id = (row.get("speaker_id") or "").strip()
            if not speaker_id:
                continue
            if speaker_id in seen:
                raise DuplicateKeyError(f"duplicate speaker_id '{speaker_id}'")
            seen.add(speaker_id)
            speakers.append(
                Speaker(
                    speaker_id=speaker_id,
                    gender=row.get("gender") or "",
                    nationality=row.get("nationality") or "",
                )
            )
    return speakers


def load_utterances(source: TextSource) -> list[Utterance]:
    """Parse an utterance inventory, one relative path per line.

    Paths must have at least three `/`-separated segments:
    speaker / recording / file. Blank lines are ignored.

    Raises:
        FormatError: malformed path (with its line number).
        DuplicateKeyError: repeated path.
    """
    utterances: list[Utterance] = []
    seen: set[str] = set()
    with open_text(source) as f:
        for lineno, line in enumerate(f, start=1):
            rel_path = line.strip()
            if not rel_path:
                continue
            parts = rel_path.split("/")
            if len(parts) < 3 or any(not p for p in parts):
                raise FormatError(
                    f"line {lineno}: expected <speaker>/<recording>/<file>, got '{rel_path}'"
                )
            if rel_path in seen:
                raise DuplicateKeyError(f"line {lineno}: duplicate utterance path '{rel_path}'")
            seen.add(rel_path)
            utterances.append(
                Utterance(
                    utterance_id=rel_path,
                    speaker_id=parts[0],
                    recording_id=parts[1],
                    rel_path=rel_path,
                )
            )
    return utterances


@dataclass
class Corpus:
    """Validated, immutable-by-convention join of speakers and utterances.

    group_index covers exactly the groupable speakers (known gender,
    non-empty nationality); ungroupable ones stay in `speakers` but never
    take part in group-based generation or reporting.
    """

    speakers: dict[str, Speaker]
    utterances: dict[str, Utterance]
    by_speaker: dict[str, list[str]]  # speaker_id -> sorted utterance ids
    group_index: dict[GroupKey, list[str]]  # group -> sorted speaker ids
    dropped_utterance_count: int = 0
    dropped_speaker_count: int = 0
    _recordings_by_speaker: dict[str, dict[str, list[str]]] = field(
        default_factory=dict, repr=False
    )

    def resolve(self, rel_path: str) -> Utterance:
        utt = self.utterances.get(rel_path)
        if utt is None:
            raise CorpusError(f"utterance path '{rel_path}' not found in corpus")
        return utt

    def speaker_of(self, rel_path: str) -> Speaker:
        return self.speakers[self.resolve(rel_path).speaker_id]

    def group_of(self, speaker_id: str) -> Optional[GroupKey]:
        speaker = self.speakers.get(speaker_id)
        return speaker.group if speaker is not None else None

    def recordings_of(self, speaker_id: str) -> dict[str, list[str]]:
        """recording_id -> sorted utterance ids, for one speaker."""
        cached = self._recordings_by_speaker.get(speaker_id)
        if cached is None:
            cached = {}
            for utt_id in self.by_speaker.get(speaker_id, []):
                rec = self.utterances[utt_id].recording_id
                cached.setdefault(rec, []).append(utt_id)
            self._recordings_by_speaker[speaker_id] = cached
        return cached


def build_corpus(speakers: Iterable[Speaker], utterances: Iterable[Utterance]) -> Corpus:
    """Join speakers and utterances into a validated corpus.

    Utterances referencing unknown speakers and speakers without utterances
    are dropped with a logged warning count; an empty result is fatal.
    """
    speaker_map = {s.speaker_id: s for s in speakers}

    by_speaker: dict[str, list[str]] = {}
    utterance_map: dict[str, Utterance] = {}
    dropped_utts = 0
    for utt in utterances:
        if utt.speaker_id not in speaker_map:
            dropped_utts += 1
            continue
        utterance_map[utt.utterance_id] = utt
        by_speaker.setdefault(utt.speaker_id, []).append(utt.utterance_id)
    if dropped_utts:
        logger.warning("dropped %d utterance(s) referencing unknown speakers", dropped_utts)

    dropped_speakers = len(speaker_map) - len(by_speaker)
    if dropped_speakers:
        logger.warning("dropped %d speaker(s) without utterances", dropped_speakers)
    speaker_map = {sid: s for sid, s in speaker_map.items() if sid in by_speaker}

    if not speaker_map or not utterance_map:
        raise CorpusError("corpus is empty after joining speakers and utterances")

    for utts in by_speaker.values():
        utts.sort()

    group_index: dict[GroupKey, list[str]] = {}
    for sid in sorted(speaker_map):
        group = speaker_map[sid].group
        if group is not None:
            group_index.setdefault(group, []).append(sid)

    return Corpus(
        speakers=speaker_map,
        utterances=utterance_map,
        by_speaker=by_speaker,
        group_index=group_index,
        dropped_utterance_count=dropped_utts,
        dropped_speaker_count=dropped_speakers,
    )


def write_metadata(corpus: Corpus, dest: TextSource) -> None:
    """Write the metadata table back out (CSV, sorted by speaker_id)."""
    with open_write(dest) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_REQUIRED_COLUMNS)
        for sid in sorted(corpus.speakers):
            s = corpus.speakers[sid]
            writer.writerow([s.speaker_id, s.gender, s.nationality])


def write_utterances(corpus: Corpus, dest: TextSource) -> None:
    """Write the utterance inventory back out, one path per line, sorted."""
    with open_write(dest) as f:
        for rel_path in sorted(corpus.utterances):
            f.write(rel_path + "\n")


@dataclass(frozen=True)
class GroupStats:
    """One per-nationality row of same-speaker pair statistics."""

    nationality: str
    speakers: int
    same_pairs: int
    pairs_per_speaker: float
    pct_trivial: float  # percentage of same pairs that are within-recording


def corpus_stats(
    corpus: Corpus, pairs: Optional[Iterable[tuple[str, str]]] = None
) -> list[GroupStats]:
    """Per-nationality same-speaker pair statistics.

    With `pairs` (enroll/test path tuples from a trial list) the rows cover
    the same-speaker pairs found there, counting speakers that appear in at
    least one such pair. Without it, the rows cover every unordered utterance
    pair each speaker could form. A pair is trivial when both utterances come
    from the same recording. Rows are sorted by pair count, descending.

    Raises:
        CorpusError: a trial-list path does not resolve in the corpus.
    """
    per_nat: dict[str, dict[str, object]] = {}

    def bucket(nationality: str) -> dict[str, object]:
        return per_nat.setdefault(
            nationality, {"speakers": set(), "pairs": 0, "trivial": 0}
        )

    if pairs is None:
        for sid, speaker in corpus.speakers.items():
            n_utts = len(corpus.by_speaker[sid])
            total = n_utts * (n_utts - 1) // 2
            within = sum(
                len(u) * (len(u) - 1) // 2 for u in corpus.recordings_of(sid).values()
            )
            b = bucket(speaker.nationality)
            b["speakers"].add(sid)
            b["pairs"] += total
            b["trivial"] += within
    else:
        for enroll_path, test_path in pairs:
            enroll = corpus.resolve(enroll_path)
            test = corpus.resolve(test_path)
            if enroll.speaker_id != test.speaker_id:
                continue
            speaker = corpus.speakers[enroll.speaker_id]
            b = bucket(speaker.nationality)
            b["speakers"].add(enroll.speaker_id)
            b["pairs"] += 1
            if enroll.recording_id == test.recording_id:
                b["trivial"] += 1

    rows = []
    for nationality, b in per_nat.items():
        n_speakers = len(b["speakers"])
        n_pairs = b["pairs"]
        rows.append(
            GroupStats(
                nationality=nationality,
                speakers=n_speakers,
                same_pairs=n_pairs,
                pairs_per_speaker=n_pairs / n_speakers if n_speakers else 0.0,
                pct_trivial=100.0 * b["trivial"] / n_pairs if n_pairs else 0.0,
            )
        )
    rows.sort(key=lambda r: (-r.same_pairs, r.nationality))
    return rows
