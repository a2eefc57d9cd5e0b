"""
Six-tier annotation document

Tiers tok-min, pos-min and disfluency are congruent (one value per token);
tok-mwu partitions the tokens into multi-word units and pos-mwu is congruent
with it; discourse holds sparse spans aligned on token boundaries.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

from speech_annotator.config.constants import (
    DEFAULT_PAUSE_SYMBOL,
    DISCOURSE,
    DISFLUENCY,
    POS_MIN,
    POS_MWU,
    TOK_MWU,
    VALUE_TIERS,
)
from speech_annotator.errors import MisalignedSpan, OverlapError

from .tagset import PosTag, format_pos_tag

logger = logging.getLogger(__name__)

TIME_EPSILON = 1e-9

Segment = Tuple[int, ...]


@dataclass(frozen=True)
class Token:
    text: str
    t_min: float
    t_max: float
    speaker: str = ""
    is_pause: bool = False
    false_start: bool = False
    intra_word_pause: bool = False
    # split off the same whitespace-delimited word as the previous token
    attached: bool = False
    pause_class: Optional[str] = None
    # written form when transcription markers were stripped from `text`
    surface: Optional[str] = None
    extra: Dict[str, str] = field(default_factory=dict, compare=True, hash=False)

    @property
    def duration(self) -> float:
        return self.t_max - self.t_min

    @property
    def duration_ms(self) -> float:
        return round((self.t_max - self.t_min) * 1000.0, 6)


@dataclass(frozen=True)
class TierValue:
    start: int
    end: int
    value: str

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class DocumentMetadata:
    sample_id: str = ""
    subcorpus_id: str = ""
    pause_symbol: str = DEFAULT_PAUSE_SYMBOL


@dataclass
class Document:
    tokens: List[Token]
    tiers: Dict[str, List[TierValue]]
    metadata: DocumentMetadata = field(default_factory=DocumentMetadata)
    # False when the input carries no usable timing (signal-less mode)
    timed: bool = True

    def __len__(self):
        return len(self.tokens)

    @property
    def speakers(self) -> List[str]:
        return sorted({token.speaker for token in self.tokens})

    def values(self, tier: str) -> List[str]:
        return [value.value for value in self.tiers[tier]]

    def set_value(self, tier: str, index: int, value: str) -> None:
        """Set the value of a congruent tier (pos-min, disfluency) at a token"""
        current = self.tiers[tier][index]
        self.tiers[tier][index] = TierValue(current.start, current.end, value)

    def copy(self) -> 'Document':
        return Document(
            tokens=list(self.tokens),
            tiers={name: list(values) for name, values in self.tiers.items()},
            metadata=self.metadata,
            timed=self.timed,
        )


class ViolationRule(str, Enum):
    CONGRUENCE = "congruence"
    PARTITION = "partition"
    SPAN = "span"
    TIME_ORDER = "time-order"
    PAUSE_SYMBOL = "pause-symbol"
    MISSING_TIER = "missing-tier"


@dataclass(frozen=True)
class Violation:
    tier: str
    index: int
    rule: ViolationRule
    detail: str = ""

    def __str__(self):
        return f"{self.rule.value} violation on {self.tier} at {self.index}: {self.detail}".rstrip(": ")


def _check_timing(tokens: Sequence[Token]) -> Optional[str]:
    last_by_speaker: Dict[str, Tuple[int, Token]] = {}
    for index, token in enumerate(tokens):
        if token.t_min > token.t_max + TIME_EPSILON:
            return f"token {index} ({token.text!r}) ends before it starts"
        previous = last_by_speaker.get(token.speaker)
        if previous is not None and previous[1].t_max > token.t_min + TIME_EPSILON:
            return f"token {index} ({token.text!r}) overlaps token {previous[0]} of speaker {token.speaker!r}"
        last_by_speaker[token.speaker] = (index, token)
    return None


def new_document(tokens: Sequence[Token], metadata: Optional[DocumentMetadata] = None,
                 timed: bool = True, check_timing: bool = True) -> Document:
    """Build a document with singleton multi-word units and empty tag tiers"""
    problem = _check_timing(tokens) if check_timing else None
    if problem:
        raise OverlapError(problem)
    tokens = list(tokens)
    tiers = {
        POS_MIN: [TierValue(i, i + 1, "") for i in range(len(tokens))],
        DISFLUENCY: [TierValue(i, i + 1, "") for i in range(len(tokens))],
        TOK_MWU: [TierValue(i, i + 1, token.text) for i, token in enumerate(tokens)],
        POS_MWU: [TierValue(i, i + 1, "") for i in range(len(tokens))],
        DISCOURSE: [],
    }
    return Document(tokens, tiers, metadata or DocumentMetadata(), timed)


def group_mwu(doc: Document, span: Tuple[int, int], tag: Union[PosTag, str], in_place: bool = False) -> Document:
    """Merge the units covering `span` into one multi-word unit tagged `tag`"""
    start, end = span
    if not 0 <= start < end <= len(doc.tokens):
        raise MisalignedSpan(f"span {span} outside the token range [0, {len(doc.tokens)})")
    units = doc.tiers[TOK_MWU]
    first = next((k for k, unit in enumerate(units) if unit.start == start), None)
    last = next((k for k, unit in enumerate(units) if unit.end == end), None)
    if first is None or last is None or last < first:
        raise MisalignedSpan(f"span {span} does not coincide with multi-word unit boundaries")
    value = tag if isinstance(tag, str) else format_pos_tag(tag)
    text = " ".join(token.text for token in doc.tokens[start:end])
    target = doc if in_place else doc.copy()
    target.tiers[TOK_MWU][first:last + 1] = [TierValue(start, end, text)]
    target.tiers[POS_MWU][first:last + 1] = [TierValue(start, end, value)]
    return target


def _check_congruent(tier: str, values: List[TierValue], n: int) -> List[Violation]:
    violations = []
    if len(values) != n:
        violations.append(Violation(tier, min(len(values), n), ViolationRule.CONGRUENCE,
                                    f"{len(values)} values for {n} tokens"))
    for k, value in enumerate(values[:n]):
        if value.span != (k, k + 1):
            violations.append(Violation(tier, k, ViolationRule.CONGRUENCE, f"span {value.span}"))
    return violations


def validate(doc: Document) -> List[Violation]:
    """All broken document invariants; empty when the document is well-formed"""
    n = len(doc.tokens)
    violations: List[Violation] = []

    last_by_speaker: Dict[str, Token] = {}
    for index, token in enumerate(doc.tokens):
        previous = last_by_speaker.get(token.speaker)
        if token.t_min > token.t_max + TIME_EPSILON or (
                previous is not None and previous.t_max > token.t_min + TIME_EPSILON):
            violations.append(Violation("tok-min", index, ViolationRule.TIME_ORDER, token.text))
        last_by_speaker[token.speaker] = token
        if token.is_pause and token.text != doc.metadata.pause_symbol:
            violations.append(Violation("tok-min", index, ViolationRule.PAUSE_SYMBOL, token.text))

    missing = [tier for tier in VALUE_TIERS if tier not in doc.tiers]
    for tier in missing:
        violations.append(Violation(tier, -1, ViolationRule.MISSING_TIER))

    for tier in (POS_MIN, DISFLUENCY):
        if tier in doc.tiers:
            violations.extend(_check_congruent(tier, doc.tiers[tier], n))

    if TOK_MWU in doc.tiers:
        expected = 0
        for k, unit in enumerate(doc.tiers[TOK_MWU]):
            if unit.start != expected or unit.end <= unit.start:
                violations.append(Violation(TOK_MWU, k, ViolationRule.PARTITION,
                                            f"span {unit.span} after boundary {expected}"))
            expected = max(expected, unit.end)
        if expected != n:
            violations.append(Violation(TOK_MWU, len(doc.tiers[TOK_MWU]), ViolationRule.PARTITION,
                                        f"units cover [0, {expected}) of {n} tokens"))
        if POS_MWU in doc.tiers:
            mwu_spans = [unit.span for unit in doc.tiers[TOK_MWU]]
            pos_spans = [unit.span for unit in doc.tiers[POS_MWU]]
            if mwu_spans != pos_spans:
                index = next((k for k, (a, b) in enumerate(zip(mwu_spans, pos_spans)) if a != b),
                             min(len(mwu_spans), len(pos_spans)))
                violations.append(Violation(POS_MWU, index, ViolationRule.CONGRUENCE,
                                            "pos-mwu spans differ from tok-mwu"))

    if DISCOURSE in doc.tiers:
        previous_end = 0
        for k, value in enumerate(doc.tiers[DISCOURSE]):
            if not 0 <= value.start < value.end <= n or value.start < previous_end:
                violations.append(Violation(DISCOURSE, k, ViolationRule.SPAN, f"span {value.span}"))
            previous_end = max(previous_end, value.end)
    return violations


def psu_segments(doc: Document, threshold_ms: int) -> List[Segment]:
    """
    Pause-separated units: maximal runs of non-pause tokens between silent
    pauses lasting at least `threshold_ms`. Pause tokens belong to no unit.
    """
    if threshold_ms <= 0:
        raise ValueError("threshold_ms must be positive")
    segments: List[Segment] = []
    current: List[int] = []
    for index, token in enumerate(doc.tokens):
        if token.is_pause:
            if token.duration_ms >= threshold_ms and current:
                segments.append(tuple(current))
                current = []
            continue
        current.append(index)
    if current:
        segments.append(tuple(current))
    return segments


def slice_document(doc: Document, start: int, end: int) -> Document:
    """Sub-document over tokens [start, end), spans clipped and re-indexed"""
    if not 0 <= start <= end <= len(doc.tokens):
        raise MisalignedSpan(f"slice [{start}, {end}) outside [0, {len(doc.tokens)})")
    tokens = doc.tokens[start:end]
    tiers: Dict[str, List[TierValue]] = {}
    for tier in (POS_MIN, DISFLUENCY):
        tiers[tier] = [TierValue(v.start - start, v.end - start, v.value) for v in doc.tiers[tier][start:end]]
    tiers[TOK_MWU], tiers[POS_MWU] = [], []
    for unit, tag in zip(doc.tiers[TOK_MWU], doc.tiers[POS_MWU]):
        a, b = max(unit.start, start), min(unit.end, end)
        if a >= b:
            continue
        text = unit.value if (a, b) == unit.span else " ".join(t.text for t in doc.tokens[a:b])
        tiers[TOK_MWU].append(TierValue(a - start, b - start, text))
        tiers[POS_MWU].append(TierValue(a - start, b - start, tag.value))
    tiers[DISCOURSE] = [
        TierValue(max(v.start, start) - start, min(v.end, end) - start, v.value)
        for v in doc.tiers[DISCOURSE] if max(v.start, start) < min(v.end, end)
    ]
    metadata = replace(doc.metadata, sample_id=f"{doc.metadata.sample_id}#{start}-{end}")
    return Document(tokens, tiers, metadata, doc.timed)

