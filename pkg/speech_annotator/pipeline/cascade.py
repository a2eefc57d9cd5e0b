"""
The annotation cascade

Each step refines the shared token list left by the previous one:
preprocess -> preliminary_pos -> detect_boundaries -> simple and structured
disfluencies -> final_pos_mwu -> detect_discourse_markers -> apply_post_rules.
"""
import logging
import time
from collections import Counter
from typing import Dict, List, Optional, Sequence, Set

from speech_annotator.annotation.document import (
    Document, TierValue, group_mwu, new_document, psu_segments, validate,
)
from speech_annotator.annotation.tagset import DisfluencyCode, disfluency_code
from speech_annotator.config import (
    DISCOURSE, DISFLUENCY, POS_MIN, POS_MWU, SILENCE_LABEL, TOK_MWU, PipelineConfig,
)
from speech_annotator.errors import LabelOutsideRegistry, PipelineError
from speech_annotator.observability import (
    ANNOTATION_LATENCY, DISFLUENCIES_DETECTED, DOCUMENTS_ANNOTATED, TOKENS_ANNOTATED, tracer,
)
from speech_annotator.preprocessing.lexicon import NO_CANDIDATES, Lexicon
from speech_annotator.preprocessing.tokenizer import classify_pauses
from speech_annotator.tagging.crf import CrfModel, decode, marginals

from .attributes import mwu_attributes, token_sequence
from .disfluency import detect_simple_disfluencies, detect_structured_disfluencies
from .resources import PipelineResources, check_pos_labels
from .rules import apply_post_rules
from .state import AnnotationState, Span

logger = logging.getLogger(__name__)

# removed from the final tagger's input
EXCLUDED_CODES = frozenset({DisfluencyCode.FIL, DisfluencyCode.FST, DisfluencyCode.WDP})
ITJ = "ITJ"


def preprocess(doc: Document, lexicon: Lexicon, cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """Look every token up; lock unambiguous tokens and record MWU and discourse-marker candidates"""
    cfg = cfg or PipelineConfig.default()
    state = AnnotationState(document=doc)
    filled_pauses = {form.casefold() for form in cfg.tokenizer.filled_pause_forms}
    for i, token in enumerate(doc.tokens):
        candidates = NO_CANDIDATES if token.is_pause else lexicon.lookup(token.text)
        state.candidates.append(candidates)
        if token.is_pause:
            state.locked_disfluency[i] = SILENCE_LABEL
            state.locked_pos[i] = ""
        elif candidates.filled_pause or token.text.casefold() in filled_pauses:
            state.locked_disfluency[i] = DisfluencyCode.FIL.value
            state.locked_pos[i] = ITJ
        else:
            if token.false_start:
                state.locked_disfluency[i] = DisfluencyCode.FST.value
            if len(candidates.tags) == 1:
                state.locked_pos[i] = next(iter(candidates.tags))

        if token.is_pause:
            continue
        if candidates.discourse_marker:
            state.discourse_candidates.append((i, i + 1))
        matches = lexicon.mwu_matches(doc.tokens, i, doc.metadata.pause_symbol)
        if matches:
            state.mwu_candidates[i] = matches
            state.discourse_candidates.extend((i, i + m.length) for m in matches if m.discourse_marker)

    for i, value in state.locked_pos.items():
        doc.set_value(POS_MIN, i, value)
    for i, value in state.locked_disfluency.items():
        doc.set_value(DISFLUENCY, i, value)
    state.discourse_candidates = sorted(set(state.discourse_candidates))
    return state


def _allowed(state: AnnotationState, indices: Sequence[int]) -> List[Optional[Set[str]]]:
    return [{state.locked_pos[i]} if i in state.locked_pos else None for i in indices]


def _ensure_segments(state: AnnotationState, cfg: PipelineConfig) -> None:
    if not state.segments:
        state.segments = psu_segments(state.document, cfg.psu_threshold_ms)


def preliminary_pos(state: AnnotationState, model: CrfModel, cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """Provisional pos-min for every non-pause token, decoded per pause-separated unit"""
    cfg = cfg or PipelineConfig.default()
    check_pos_labels(model, "preliminary")
    _ensure_segments(state, cfg)
    doc = state.document
    for segment in state.segments:
        labels = decode(model, token_sequence(doc, segment, state.candidates), _allowed(state, segment))
        for i, label in zip(segment, labels):
            doc.set_value(POS_MIN, i, state.locked_pos.get(i, label))
    return state


def detect_boundaries(state: AnnotationState, cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """Split the token list at long pauses; no tagging sequence crosses a boundary"""
    cfg = cfg or PipelineConfig.default()
    state.segments = psu_segments(state.document, cfg.psu_threshold_ms)
    logger.debug(f"{len(state.segments)} pause-separated units")
    return state


def excluded_from_final(doc: Document) -> Set[int]:
    excluded = set()
    for i, (token, value) in enumerate(zip(doc.tokens, doc.values(DISFLUENCY))):
        if token.is_pause or disfluency_code(value) in EXCLUDED_CODES:
            excluded.add(i)
    return excluded


def _category(value: str) -> str:
    return value.split()[0].split(":")[0] if value else ""


def _mwu_compatible(state: AnnotationState, pos: Sequence[str], span: Span, tag: str) -> bool:
    category = _category(tag)
    if all(_category(pos[i]) == category for i in range(*span)):
        return True
    return category in {_category(candidate) for candidate in state.candidates[span[0]].tags}


def group_units(state: AnnotationState, excluded: Set[int]) -> int:
    """Greedy longest-first grouping of dictionary MWUs; returns the number of groups formed"""
    doc = state.document
    segment_of = state.segment_of()
    boundaries = state.interruption_points
    pos = doc.values(POS_MIN)
    grouped = 0
    i = 0
    while i < len(doc.tokens):
        accepted = None
        for match in state.mwu_candidates.get(i, ()):
            span = (i, i + match.length)
            inside = range(*span)
            if any(j in excluded for j in inside):
                continue
            if len({segment_of.get(j) for j in inside}) != 1:
                continue
            if any(j in boundaries for j in range(span[0], span[1] - 1)):
                continue
            if _mwu_compatible(state, pos, span, match.tag):
                accepted = (span, match.tag)
                break
        if accepted is None:
            i += 1
            continue
        span, tag = accepted
        group_mwu(doc, span, tag, in_place=True)
        grouped += 1
        i = span[1]

    pos = doc.values(POS_MIN)
    doc.tiers[POS_MWU] = [
        TierValue(unit.start, unit.end, pos[unit.start]) if len(unit) == 1 else tag
        for unit, tag in zip(doc.tiers[TOK_MWU], doc.tiers[POS_MWU])
    ]
    return grouped


def final_pos_mwu(state: AnnotationState, model: CrfModel, lexicon: Lexicon,
                  cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """Re-tag the fluent tokens with MWU context, then group multi-word units"""
    cfg = cfg or PipelineConfig.default()
    check_pos_labels(model, "final")
    _ensure_segments(state, cfg)
    doc = state.document
    excluded = excluded_from_final(doc)
    mwu = mwu_attributes(doc, lexicon)
    for segment in state.segments:
        fluent = [i for i in segment if i not in excluded]
        if not fluent:
            continue
        labels = decode(model, token_sequence(doc, fluent, state.candidates, mwu), _allowed(state, fluent))
        for i, label in zip(fluent, labels):
            doc.set_value(POS_MIN, i, state.locked_pos.get(i, label))
    grouped = group_units(state, excluded)
    logger.debug(f"{grouped} multi-word units grouped")
    return state


def detect_discourse_markers(state: AnnotationState, model: Optional[CrfModel],
                             cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """
    Mark candidate spans whose mean probability of the discourse-marker label
    is strictly above the threshold. Without a model nothing is marked.
    """
    cfg = cfg or PipelineConfig.default()
    doc = state.document
    doc.tiers[DISCOURSE] = []
    if model is None or not state.discourse_candidates:
        return state
    if cfg.discourse_label not in model.label_index:
        raise LabelOutsideRegistry(f"discourse model has no {cfg.discourse_label!r} label")
    label = model.label_index[cfg.discourse_label]
    segment_of = state.segment_of()
    probabilities: Dict[int, Dict[int, float]] = {}

    def probability(i: int) -> float:
        k = segment_of[i]
        if k not in probabilities:
            segment = state.segments[k]
            node = marginals(model, token_sequence(doc, segment, state.candidates))
            probabilities[k] = {j: float(node[t, label]) for t, j in enumerate(segment)}
        return probabilities[k][i]

    marked: List[TierValue] = []
    # longest candidate first at each start, no overlaps
    for start, end in sorted(state.discourse_candidates, key=lambda s: (s[0], -(s[1] - s[0]))):
        if marked and start < marked[-1].end:
            continue
        if any(j not in segment_of for j in range(start, end)):
            continue
        mean = sum(probability(j) for j in range(start, end)) / (end - start)
        if mean > cfg.discourse_threshold:
            marked.append(TierValue(start, end, cfg.discourse_value))
    doc.tiers[DISCOURSE] = marked
    return state


def _step(name: str):
    return tracer.start_as_current_span(f"pipeline.{name}")


def _count(doc: Document) -> None:
    pauses = sum(1 for token in doc.tokens if token.is_pause)
    TOKENS_ANNOTATED.labels(kind="pause").inc(pauses)
    TOKENS_ANNOTATED.labels(kind="word").inc(len(doc.tokens) - pauses)
    codes = Counter(disfluency_code(value) for value in doc.values(DISFLUENCY))
    for code, n in codes.items():
        if code is not None and code != DisfluencyCode.SIL:
            DISFLUENCIES_DETECTED.labels(code=code.value).inc(n)


def run_cascade(doc: Document, resources: PipelineResources,
                cfg: Optional[PipelineConfig] = None) -> AnnotationState:
    """Annotate a copy of `doc`, returning the final state with its structured disfluencies"""
    cfg = cfg or PipelineConfig.default().with_tokenizer(resources.tokenizer_config)
    started = time.perf_counter()
    tokens = classify_pauses(doc.tokens, cfg.tokenizer)
    work = new_document(tokens, doc.metadata, doc.timed)

    with tracer.start_as_current_span("pipeline.annotate") as span:
        span.set_attribute("document.tokens", len(tokens))
        with _step("preprocess"):
            state = preprocess(work, resources.lexicon, cfg)
        with _step("preliminary_pos"):
            preliminary_pos(state, resources.prelim_model, cfg)
        with _step("detect_boundaries"):
            detect_boundaries(state, cfg)
        with _step("detect_simple_disfluencies"):
            detect_simple_disfluencies(state, cfg.disfluency)
        with _step("detect_structured_disfluencies"):
            detect_structured_disfluencies(state, resources.disfluency_model, cfg.disfluency)
        with _step("final_pos_mwu"):
            final_pos_mwu(state, resources.final_model, resources.lexicon, cfg)
        with _step("detect_discourse_markers"):
            detect_discourse_markers(state, resources.discourse_model, cfg)
        with _step("apply_post_rules"):
            apply_post_rules(work, resources.post_rules, locked=set(state.locked_pos))

    violations = validate(work)
    if violations:
        raise PipelineError(f"annotation broke {len(violations)} document invariants, first: {violations[0]}")
    DOCUMENTS_ANNOTATED.inc()
    _count(work)
    ANNOTATION_LATENCY.observe(time.perf_counter() - started)
    return state


def annotate(doc: Document, resources: PipelineResources, cfg: Optional[PipelineConfig] = None) -> Document:
    """Six-tier annotation of a tokenized document; tokens and timing are preserved"""
    return run_cascade(doc, resources, cfg).document

