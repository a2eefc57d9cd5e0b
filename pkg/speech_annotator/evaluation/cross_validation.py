"""
k-fold cross-validation of the whole cascade
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

from speech_annotator.annotation.document import Document
from speech_annotator.config import EvaluationConfig
from speech_annotator.observability import tracer
from speech_annotator.pipeline.cascade import annotate
from speech_annotator.pipeline.rules import PostRule
from speech_annotator.pipeline.training import train_resources
from speech_annotator.preprocessing.lexicon import Lexicon

from .folds import FoldPlan, split_folds
from .metrics import DisfluencyScores, Metrics, PosScores, score_disfluency, score_pos

logger = logging.getLogger(__name__)


@dataclass
class FoldResult:
    index: int
    train_units: int
    test_units: int
    pos: PosScores
    disfluency: DisfluencyScores

    @property
    def metrics(self) -> Metrics:
        return Metrics.from_scores(self.pos, self.disfluency)


@dataclass
class CrossValidationResult:
    plan: FoldPlan
    folds: List[FoldResult]

    @property
    def mean(self) -> Metrics:
        return Metrics.mean([fold.metrics for fold in self.folds])

    @property
    def pooled_pos(self) -> PosScores:
        return sum((fold.pos for fold in self.folds), PosScores())

    @property
    def pooled_disfluency(self) -> DisfluencyScores:
        return sum((fold.disfluency for fold in self.folds), DisfluencyScores())


def run_fold(corpus: Sequence[Document], plan: FoldPlan, index: int, lexicon: Lexicon,
             cfg: EvaluationConfig, post_rules: Sequence[PostRule] = ()) -> FoldResult:
    """Train on every fold but `index`, annotate the held-out PSUs and score them"""
    train_ids = [psu for k in range(plan.k) if k != index for psu in plan.fold(k)]
    test_ids = plan.fold(index)
    with tracer.start_as_current_span("evaluation.fold") as span:
        span.set_attribute("fold.index", index)
        resources = train_resources(plan.units(corpus, train_ids), lexicon, cfg.pipeline, post_rules)
        pos, disfluency = PosScores(), DisfluencyScores()
        for gold in plan.units(corpus, test_ids):
            pred = annotate(gold, resources, cfg.pipeline)
            pos += score_pos(gold, pred)
            disfluency += score_disfluency(gold, pred)
    result = FoldResult(index, len(train_ids), len(test_ids), pos, disfluency)
    logger.info(f"Fold {index + 1}/{plan.k}: pos full {pos.precision_full:.4f}, "
                f"disfluency P {disfluency.detection_precision:.4f} R {disfluency.detection_recall:.4f}")
    return result


def cross_validate(corpus: Sequence[Document], lexicon: Lexicon, cfg: Optional[EvaluationConfig] = None,
                   post_rules: Sequence[PostRule] = ()) -> CrossValidationResult:
    """
    Folds run on `cfg.jobs` worker threads; results are collected in fold
    order so the outcome does not depend on scheduling.
    """
    cfg = cfg or EvaluationConfig()
    plan = split_folds(corpus, cfg.k, cfg.psu_threshold_ms, cfg.seed)
    with ThreadPoolExecutor(max_workers=cfg.jobs) as executor:
        folds = list(executor.map(lambda index: run_fold(corpus, plan, index, lexicon, cfg, post_rules),
                                  range(plan.k)))
    return CrossValidationResult(plan, folds)
