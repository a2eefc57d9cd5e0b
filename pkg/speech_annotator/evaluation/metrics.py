"""
Tagging and disfluency scores

POS precision is token accuracy over non-pause tokens at three projection
levels. Disfluency detection is token-level: a token is marked when its
disfluency value is non-empty and not SIL. Empty denominators score 1.0.
"""
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Dict, Optional, Sequence, Tuple

from speech_annotator.annotation.document import Document
from speech_annotator.annotation.tagset import DisfluencyCode, disfluency_code, project_tag_value
from speech_annotator.config import DISFLUENCY, POS_MIN
from speech_annotator.errors import IncongruentDocuments

LEVELS: Tuple[Optional[int], ...] = (1, 2, None)


def ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 1.0


def check_congruent(gold: Document, pred: Document) -> None:
    if len(gold.tokens) != len(pred.tokens):
        raise IncongruentDocuments(f"{len(gold.tokens)} gold tokens, {len(pred.tokens)} predicted")
    for i, (a, b) in enumerate(zip(gold.tokens, pred.tokens)):
        if a.text != b.text or a.is_pause != b.is_pause:
            raise IncongruentDocuments(f"token {i}: gold {a.text!r}, predicted {b.text!r}")


@dataclass
class PosScores:
    total: int = 0
    correct_l1: int = 0
    correct_l2: int = 0
    correct_full: int = 0
    # (gold, predicted) -> count, full-tag errors only
    confusion: Counter = field(default_factory=Counter)

    @property
    def precision_l1(self) -> float:
        return ratio(self.correct_l1, self.total)

    @property
    def precision_l2(self) -> float:
        return ratio(self.correct_l2, self.total)

    @property
    def precision_full(self) -> float:
        return ratio(self.correct_full, self.total)

    def __add__(self, other: 'PosScores') -> 'PosScores':
        return PosScores(self.total + other.total, self.correct_l1 + other.correct_l1,
                         self.correct_l2 + other.correct_l2, self.correct_full + other.correct_full,
                         self.confusion + other.confusion)


def score_pos(gold: Document, pred: Document) -> PosScores:
    check_congruent(gold, pred)
    scores = PosScores()
    for token, g, p in zip(gold.tokens, gold.values(POS_MIN), pred.values(POS_MIN)):
        if token.is_pause:
            continue
        scores.total += 1
        matches = [project_tag_value(g, level) == project_tag_value(p, level) for level in LEVELS]
        scores.correct_l1 += matches[0]
        scores.correct_l2 += matches[1]
        scores.correct_full += matches[2]
        if not matches[2]:
            scores.confusion[(g, p)] += 1
    return scores


@dataclass
class CodeCounts:
    gold: int = 0
    predicted: int = 0
    correct: int = 0

    @property
    def precision(self) -> float:
        return ratio(self.correct, self.predicted)

    @property
    def recall(self) -> float:
        return ratio(self.correct, self.gold)

    def __add__(self, other: 'CodeCounts') -> 'CodeCounts':
        return CodeCounts(self.gold + other.gold, self.predicted + other.predicted, self.correct + other.correct)


@dataclass
class DisfluencyScores:
    gold_marked: int = 0
    predicted_marked: int = 0
    detected: int = 0
    classified: int = 0
    per_code: Dict[str, CodeCounts] = field(default_factory=dict)
    # (gold code, predicted code) over detected tokens
    confusion: Counter = field(default_factory=Counter)

    @property
    def detection_precision(self) -> float:
        return ratio(self.detected, self.predicted_marked)

    @property
    def detection_recall(self) -> float:
        return ratio(self.detected, self.gold_marked)

    @property
    def classification_precision(self) -> float:
        return ratio(self.classified, self.detected)

    def code(self, name: str) -> CodeCounts:
        return self.per_code.setdefault(name, CodeCounts())

    def __add__(self, other: 'DisfluencyScores') -> 'DisfluencyScores':
        per_code = {name: self.per_code.get(name, CodeCounts()) + other.per_code.get(name, CodeCounts())
                    for name in sorted(set(self.per_code) | set(other.per_code))}
        return DisfluencyScores(self.gold_marked + other.gold_marked,
                                self.predicted_marked + other.predicted_marked,
                                self.detected + other.detected, self.classified + other.classified,
                                per_code, self.confusion + other.confusion)


def _marked_code(value: str) -> Optional[str]:
    code = disfluency_code(value)
    if code is None or code == DisfluencyCode.SIL:
        return None
    return code.value


def score_disfluency(gold: Document, pred: Document) -> DisfluencyScores:
    check_congruent(gold, pred)
    scores = DisfluencyScores()
    for token, g, p in zip(gold.tokens, gold.values(DISFLUENCY), pred.values(DISFLUENCY)):
        if token.is_pause:
            continue
        g, p = _marked_code(g), _marked_code(p)
        if g is not None:
            scores.gold_marked += 1
            scores.code(g).gold += 1
        if p is not None:
            scores.predicted_marked += 1
            scores.code(p).predicted += 1
        if g is not None and p is not None:
            scores.detected += 1
            scores.confusion[(g, p)] += 1
            if g == p:
                scores.classified += 1
                scores.code(g).correct += 1
    return scores


@dataclass(frozen=True)
class Metrics:
    pos_precision_l1: float
    pos_precision_l2: float
    pos_precision_full: float
    disf_detection_precision: float
    disf_detection_recall: float
    disf_classification_precision: float
    # code -> (precision, recall)
    per_code: Dict[str, Tuple[float, float]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_scores(cls, pos: PosScores, disfluency: DisfluencyScores) -> 'Metrics':
        return cls(
            pos.precision_l1, pos.precision_l2, pos.precision_full,
            disfluency.detection_precision, disfluency.detection_recall, disfluency.classification_precision,
            {name: (counts.precision, counts.recall) for name, counts in sorted(disfluency.per_code.items())},
        )

    @classmethod
    def mean(cls, runs: Sequence['Metrics']) -> 'Metrics':
        """Unweighted mean; per-code figures average over the runs where the code occurs"""
        if not runs:
            raise ValueError("no metrics to average")
        values = {
            f.name: sum(getattr(run, f.name) for run in runs) / len(runs)
            for f in fields(cls) if f.name != "per_code"
        }
        codes = sorted({code for run in runs for code in run.per_code})
        per_code = {}
        for code in codes:
            present = [run.per_code[code] for run in runs if code in run.per_code]
            per_code[code] = (sum(p for p, _ in present) / len(present), sum(r for _, r in present) / len(present))
        return cls(per_code=per_code, **values)

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "per_code"}
