"""
Disfluency detection

Simple disfluencies (FIL, FST, WDP, LEN) affect one token and are found by
lexical and duration rules. Structured ones follow the
``(reparandum) * <interregnum> repair`` pattern: exact repetitions are found
by rule, DEL/SUB/INS only by the optional disfluency CRF.
"""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from speech_annotator.annotation.tagset import (
    DisfluencyCode, DisfluencyLabel, DisfluencyMarker, disfluency_code, format_disfluency_label,
)
from speech_annotator.config import DISFLUENCY, OUTSIDE_LABEL, DisfluencyConfig
from speech_annotator.tagging.crf import CrfModel, decode

from .attributes import token_sequence
from .state import AnnotationState, StructuredDisfluency

logger = logging.getLogger(__name__)

# codes the statistical layer may write
MODEL_CODES = frozenset({DisfluencyCode.DEL, DisfluencyCode.SUB, DisfluencyCode.INS})

_MARKER_PRIORITY = {
    DisfluencyMarker.INTERRUPTION_POINT: 0,
    DisfluencyMarker.REPAIR: 1,
    DisfluencyMarker.EDITING_TERM: 2,
    None: 3,
}


def _lock(state: AnnotationState, i: int, code: DisfluencyCode) -> None:
    state.locked_disfluency[i] = code.value
    state.document.set_value(DISFLUENCY, i, code.value)


def _seconds_per_char(state: AnnotationState) -> Dict[str, np.ndarray]:
    by_speaker = defaultdict(list)
    for token in state.document.tokens:
        if not token.is_pause and token.text:
            by_speaker[token.speaker].append(token.duration / len(token.text))
    return {speaker: np.asarray(values) for speaker, values in by_speaker.items()}


def detect_simple_disfluencies(state: AnnotationState, cfg: Optional[DisfluencyConfig] = None) -> AnnotationState:
    """Add WDP and LEN to the FIL/FST labels set during preprocessing"""
    cfg = cfg or DisfluencyConfig()
    doc = state.document
    for i, token in enumerate(doc.tokens):
        if token.intra_word_pause and i not in state.locked_disfluency:
            _lock(state, i, DisfluencyCode.WDP)

    if not (cfg.detect_lengthening and doc.timed):
        return state
    durations = _seconds_per_char(state)
    cutoffs = {}
    for speaker, values in durations.items():
        std = float(np.std(values))
        cutoffs[speaker] = float(np.mean(values)) + cfg.lengthening_k * std if std > 0 else None

    n = len(doc.tokens)
    found = 0
    for i, token in enumerate(doc.tokens):
        if token.is_pause or not token.text or i in state.locked_disfluency:
            continue
        # pre-pausal lengthening is ordinary final lengthening
        if i + 1 >= n or doc.tokens[i + 1].is_pause:
            continue
        cutoff = cutoffs.get(token.speaker)
        if cutoff is not None and token.duration / len(token.text) > cutoff:
            _lock(state, i, DisfluencyCode.LEN)
            found += 1
    if found:
        logger.debug(f"{found} lengthened tokens in {doc.metadata.sample_id or 'document'}")
    return state


def _repetitions(state: AnnotationState, view: Sequence[int], max_length: int) -> List[StructuredDisfluency]:
    doc = state.document
    words = [doc.tokens[i].text.casefold() for i in view]
    structures = []
    p = 0
    while p < len(view):
        found = 0
        for m in range(min(max_length, (len(view) - p) // 2), 0, -1):
            if words[p:p + m] == words[p + m:p + 2 * m]:
                found = m
                break
        if not found:
            p += 1
            continue
        reparandum = (view[p], view[p + found - 1] + 1)
        repair = (view[p + found], view[p + 2 * found - 1] + 1)
        interregnum = tuple(range(reparandum[1], repair[0]))
        structures.append(StructuredDisfluency(DisfluencyCode.REP, reparandum, interregnum, repair))
        # the repair may itself be repeated
        p += found
    return structures


def _clusters(structures: Sequence[StructuredDisfluency]) -> List[List[StructuredDisfluency]]:
    clusters: List[List[StructuredDisfluency]] = []
    end = -1
    for structure in sorted(structures, key=lambda s: s.extent):
        start, stop = structure.extent
        if clusters and start < end:
            clusters[-1].append(structure)
            end = max(end, stop)
        else:
            clusters.append([structure])
            end = stop
    return clusters


def _structure_labels(structure: StructuredDisfluency) -> Dict[int, Optional[DisfluencyMarker]]:
    labels: Dict[int, Optional[DisfluencyMarker]] = {}
    for i in range(*structure.reparandum):
        labels[i] = None
    labels[structure.interruption_point] = DisfluencyMarker.INTERRUPTION_POINT
    for i in structure.interregnum:
        labels[i] = DisfluencyMarker.EDITING_TERM
    for i in range(*structure.repair):
        labels[i] = DisfluencyMarker.REPAIR
    return labels


def write_structures(state: AnnotationState) -> None:
    """Write structured labels; overlapping structures merge into COM, simple labels keep their token"""
    doc = state.document
    for cluster in _clusters(state.structures):
        code = cluster[0].code if len(cluster) == 1 else DisfluencyCode.COM
        markers: Dict[int, Optional[DisfluencyMarker]] = {}
        for structure in cluster:
            for i, marker in _structure_labels(structure).items():
                if i not in markers or _MARKER_PRIORITY[marker] < _MARKER_PRIORITY[markers[i]]:
                    markers[i] = marker
        for i, marker in sorted(markers.items()):
            if i in state.locked_disfluency or doc.tokens[i].is_pause:
                continue
            doc.set_value(DISFLUENCY, i, format_disfluency_label(DisfluencyLabel(code, marker)))


def detection_view(state: AnnotationState, segment: Sequence[int]) -> List[int]:
    """Segment tokens the structured detectors look at: filled pauses are skipped"""
    return [i for i in segment if state.locked_disfluency.get(i) != DisfluencyCode.FIL.value]


def detect_structured_disfluencies(state: AnnotationState, model: Optional[CrfModel] = None,
                                   cfg: Optional[DisfluencyConfig] = None) -> AnnotationState:
    cfg = cfg or DisfluencyConfig()
    doc = state.document
    state.structures = []
    for segment in state.segments:
        state.structures.extend(_repetitions(state, detection_view(state, segment), cfg.max_repetition))
    write_structures(state)

    if model is not None:
        for segment in state.segments:
            view = detection_view(state, segment)
            if not view:
                continue
            labels = decode(model, token_sequence(doc, view, state.candidates))
            current = doc.values(DISFLUENCY)
            for i, label in zip(view, labels):
                if label == OUTSIDE_LABEL or current[i]:
                    continue
                if disfluency_code(label) in MODEL_CODES:
                    doc.set_value(DISFLUENCY, i, label)
    logger.debug(f"{len(state.structures)} repetitions in {doc.metadata.sample_id or 'document'}")
    return state
