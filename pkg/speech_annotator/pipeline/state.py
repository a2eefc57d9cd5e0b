"""
Shared state of one document travelling through the cascade
"""
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from speech_annotator.annotation.document import Document, Segment
from speech_annotator.annotation.tagset import DisfluencyCode
from speech_annotator.preprocessing.lexicon import Candidates, MwuMatch

Span = Tuple[int, int]


@dataclass(frozen=True)
class StructuredDisfluency:
    """(reparandum) * <interregnum> repair, as document token indices"""
    code: DisfluencyCode
    reparandum: Span
    interregnum: Tuple[int, ...]
    repair: Span

    @property
    def interruption_point(self) -> int:
        """Last token of the reparandum"""
        return self.reparandum[1] - 1

    @property
    def extent(self) -> Span:
        return (self.reparandum[0], self.repair[1])


@dataclass
class AnnotationState:
    document: Document
    candidates: List[Candidates] = field(default_factory=list)
    # token index -> tier value no later step may overwrite
    locked_pos: Dict[int, str] = field(default_factory=dict)
    locked_disfluency: Dict[int, str] = field(default_factory=dict)
    mwu_candidates: Dict[int, List[MwuMatch]] = field(default_factory=dict)
    discourse_candidates: List[Span] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)
    structures: List[StructuredDisfluency] = field(default_factory=list)

    @property
    def interruption_points(self) -> Set[int]:
        return {structure.interruption_point for structure in self.structures}

    def segment_of(self) -> Dict[int, int]:
        return {i: k for k, segment in enumerate(self.segments) for i in segment}
