"""Inclusive, difficulty-graded trial lists for speaker verification
evaluation: generation, grading, scoring, metrics, and robustness analysis."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    GroupStats,
    Speaker,
    Utterance,
    build_corpus,
    corpus_stats,
    group_label,
    load_metadata,
    load_utterances,
)
from .errors import (
    CorpusError,
    DuplicateKeyError,
    FairtrialError,
    FormatError,
    GenerationError,
    GradingError,
    MetricError,
    ScoreError,
)
from .grading import Grade, GradeHistogram, PairLabel, grade_pair, grade_trial_list
from .metrics import (
    DcfParams,
    DetCurve,
    MetricsResult,
    eer,
    evaluate,
    fnr_at_fpr,
    min_dcf,
    sweep,
)
from .robustness import (
    DetBand,
    ExperimentGrid,
    GridResults,
    SpreadStats,
    det_band,
    run_grid,
    spread,
)
from .scoring import ScoreSet, SimConfig, load_scores, simulate_scores, write_scores
from .trialgen import (
    GenerationConfig,
    TrialList,
    TrialPair,
    eligible_speakers,
    generate,
    generate_variants,
    read_trial_file,
    resolve_trials,
    write_trial_file,
)

__all__ = [
    "__version__",
    "Corpus",
    "GroupStats",
    "Speaker",
    "Utterance",
    "build_corpus",
    "corpus_stats",
    "group_label",
    "load_metadata",
    "load_utterances",
    "CorpusError",
    "DuplicateKeyError",
    "FairtrialError",
    "FormatError",
    "GenerationError",
    "GradingError",
    "MetricError",
    "ScoreError",
    "Grade",
    "GradeHistogram",
    "PairLabel",
    "grade_pair",
    "grade_trial_list",
    "DcfParams",
    "DetCurve",
    "MetricsResult",
    "eer",
    "evaluate",
    "fnr_at_fpr",
    "min_dcf",
    "sweep",
    "DetBand",
    "ExperimentGrid",
    "GridResults",
    "SpreadStats",
    "det_band",
    "run_grid",
    "spread",
    "ScoreSet",
    "SimConfig",
    "load_scores",
    "simulate_scores",
    "write_scores",
    "GenerationConfig",
    "TrialList",
    "TrialPair",
    "eligible_speakers",
    "generate",
    "generate_variants",
    "read_trial_file",
    "resolve_trials",
    "write_trial_file",
]
