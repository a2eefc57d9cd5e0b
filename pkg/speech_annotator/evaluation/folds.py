"""
PSU-balanced fold assignment
"""
import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from speech_annotator.annotation.document import Document, psu_segments, slice_document
from speech_annotator.config import DEFAULT_FOLDS, DEFAULT_SEED, PSU_THRESHOLD_MS
from speech_annotator.errors import TooFewUnits

logger = logging.getLogger(__name__)


class PsuId(NamedTuple):
    document: int
    segment: int


@dataclass
class FoldPlan:
    k: int
    assignment: Dict[PsuId, int]
    # PSU -> sub-corpus id
    strata: Dict[PsuId, str]
    # PSU -> token range [start, end) in its document
    spans: Dict[PsuId, Tuple[int, int]]

    def fold(self, index: int) -> List[PsuId]:
        return sorted(psu for psu, fold in self.assignment.items() if fold == index)

    def sizes(self, stratum: Optional[str] = None) -> List[int]:
        counts = [0] * self.k
        for psu, fold in self.assignment.items():
            if stratum is None or self.strata[psu] == stratum:
                counts[fold] += 1
        return counts

    def units(self, corpus: Sequence[Document], psus: Sequence[PsuId]) -> List[Document]:
        """Materialise PSUs as sub-documents"""
        return [slice_document(corpus[psu.document], *self.spans[psu]) for psu in psus]


def split_folds(corpus: Sequence[Document], k: int = DEFAULT_FOLDS, psu_threshold_ms: int = PSU_THRESHOLD_MS,
                seed: int = DEFAULT_SEED) -> FoldPlan:
    """
    Shuffle each sub-corpus's PSUs with `seed` and deal them round-robin into
    k folds. The dealing offset carries over between sub-corpora so that
    overall fold sizes stay balanced too.
    """
    by_stratum: Dict[str, List[PsuId]] = defaultdict(list)
    strata: Dict[PsuId, str] = {}
    spans: Dict[PsuId, Tuple[int, int]] = {}
    for d, doc in enumerate(corpus):
        for s, segment in enumerate(psu_segments(doc, psu_threshold_ms)):
            psu = PsuId(d, s)
            by_stratum[doc.metadata.subcorpus_id].append(psu)
            strata[psu] = doc.metadata.subcorpus_id
            spans[psu] = (segment[0], segment[-1] + 1)

    rng = random.Random(seed)
    assignment: Dict[PsuId, int] = {}
    offset = 0
    for stratum in sorted(by_stratum):
        units = by_stratum[stratum]
        if len(units) < k:
            raise TooFewUnits(f"sub-corpus {stratum!r} has {len(units)} PSUs, fewer than k={k}")
        rng.shuffle(units)
        for n, psu in enumerate(units):
            assignment[psu] = (offset + n) % k
        offset = (offset + len(units)) % k
    if not assignment:
        raise TooFewUnits("corpus has no PSUs")
    logger.info(f"Split {len(assignment)} PSUs from {len(by_stratum)} sub-corpora into {k} folds")
    return FoldPlan(k, assignment, strata, spans)
