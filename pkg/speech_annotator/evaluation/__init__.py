from .cross_validation import CrossValidationResult, FoldResult, cross_validate, run_fold
from .folds import FoldPlan, PsuId, split_folds
from .metrics import (
    CodeCounts, DisfluencyScores, Metrics, PosScores, check_congruent, score_disfluency, score_pos,
)
from .report import format_confusion, format_report, format_table, metrics_registry
from .synthetic import SyntheticCorpus, generate_corpus, synthetic_lexicon
