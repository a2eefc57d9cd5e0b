"""
Training every cascade model from gold-annotated documents
"""
import logging
from typing import Dict, List, Optional, Sequence

from speech_annotator.annotation.document import Document, psu_segments
from speech_annotator.annotation.tagset import (
    DisfluencyCode, TagRegistry, default_registry, disfluency_code, parse_tag_value,
)
from speech_annotator.config import (
    DISCOURSE, DISCOURSE_MODEL_FILE, DISFLUENCY, DISFLUENCY_MODEL_FILE, FINAL_MODEL_FILE, OUTSIDE_LABEL,
    POS_MIN, PRELIM_MODEL_FILE, PipelineConfig,
)
from speech_annotator.errors import LabelOutsideRegistry, NoData, TagError
from speech_annotator.preprocessing.lexicon import NO_CANDIDATES, Lexicon
from speech_annotator.preprocessing.tokenizer import classify_pauses
from speech_annotator.tagging.features import DEFAULT_TEMPLATES, FINAL_TEMPLATES, LabeledSequence
from speech_annotator.tagging.training import TrainingResult, fit

from .attributes import mwu_attributes, token_sequence
from .cascade import EXCLUDED_CODES
from .disfluency import MODEL_CODES
from .resources import PipelineResources
from .rules import PostRule

logger = logging.getLogger(__name__)


class _GoldView:
    """A gold document with classified pauses, its segments and lexicon candidates"""

    def __init__(self, doc: Document, lexicon: Lexicon, cfg: PipelineConfig):
        tokens = classify_pauses(doc.tokens, cfg.tokenizer)
        self.document = Document(tokens, doc.tiers, doc.metadata, doc.timed)
        self.segments = psu_segments(self.document, cfg.psu_threshold_ms)
        self.candidates = [NO_CANDIDATES if t.is_pause else lexicon.lookup(t.text) for t in tokens]
        self.pos = doc.values(POS_MIN)
        self.disfluency = doc.values(DISFLUENCY)
        self.mwu = mwu_attributes(self.document, lexicon)

    def sequence(self, indices: Sequence[int], labels: Sequence[str], mwu: bool = False) -> LabeledSequence:
        return token_sequence(self.document, indices, self.candidates, self.mwu if mwu else None, labels)

    def in_discourse(self) -> List[bool]:
        marked = [False] * len(self.document.tokens)
        for value in self.document.tiers[DISCOURSE]:
            for i in range(value.start, value.end):
                marked[i] = True
        return marked


def _check_gold_tags(views: Sequence[_GoldView], registry: TagRegistry) -> None:
    for view in views:
        for i, value in enumerate(view.pos):
            if not value or view.document.tokens[i].is_pause:
                continue
            try:
                parse_tag_value(value, registry)
            except TagError as e:
                raise LabelOutsideRegistry(
                    f"{view.document.metadata.sample_id or 'gold document'} token {i}: {e}") from None


def pos_sequences(views: Sequence[_GoldView], final: bool) -> List[LabeledSequence]:
    """Preliminary data covers every tagged token; final data only the fluent ones"""
    data = []
    for view in views:
        for segment in view.segments:
            indices = [i for i in segment if view.pos[i]]
            if final:
                indices = [i for i in indices if disfluency_code(view.disfluency[i]) not in EXCLUDED_CODES]
            if indices:
                data.append(view.sequence(indices, [view.pos[i] for i in indices], mwu=final))
    return data


def disfluency_sequences(views: Sequence[_GoldView]) -> List[LabeledSequence]:
    data = []
    for view in views:
        for segment in view.segments:
            indices = [i for i in segment if disfluency_code(view.disfluency[i]) != DisfluencyCode.FIL]
            labels = [view.disfluency[i] if disfluency_code(view.disfluency[i]) in MODEL_CODES else OUTSIDE_LABEL
                      for i in indices]
            if indices:
                data.append(view.sequence(indices, labels))
    return data


def discourse_sequences(views: Sequence[_GoldView], label: str) -> List[LabeledSequence]:
    data = []
    for view in views:
        marked = view.in_discourse()
        for segment in view.segments:
            data.append(view.sequence(segment, [label if marked[i] else OUTSIDE_LABEL for i in segment]))
    return data


def _has_label(data: Sequence[LabeledSequence], keep) -> bool:
    return any(keep(label) for seq in data for label in seq.labels)


def train_resources(gold: Sequence[Document], lexicon: Lexicon, cfg: Optional[PipelineConfig] = None,
                    post_rules: Sequence[PostRule] = (),
                    registry: Optional[TagRegistry] = None) -> PipelineResources:
    """
    Train the preliminary and final POS models, plus the disfluency and
    discourse-marker models when the gold corpus carries their labels.
    """
    cfg = cfg or PipelineConfig.default()
    registry = registry or default_registry()
    views = [_GoldView(doc, lexicon, cfg) for doc in gold if doc.tokens]
    if not views:
        raise NoData("no gold documents with tokens")
    _check_gold_tags(views, registry)
    logger.info(f"Training cascade models on {len(views)} documents, "
                f"{sum(len(v.document.tokens) for v in views)} tokens")

    results: Dict[str, TrainingResult] = {
        PRELIM_MODEL_FILE: fit(pos_sequences(views, final=False), cfg.training, DEFAULT_TEMPLATES),
        FINAL_MODEL_FILE: fit(pos_sequences(views, final=True), cfg.training, FINAL_TEMPLATES),
    }

    disfluency_data = disfluency_sequences(views)
    if _has_label(disfluency_data, lambda label: label != OUTSIDE_LABEL):
        results[DISFLUENCY_MODEL_FILE] = fit(disfluency_data, cfg.training, DEFAULT_TEMPLATES)
    else:
        logger.info("No DEL/SUB/INS labels in the gold corpus, skipping the disfluency model")

    discourse_data = discourse_sequences(views, cfg.discourse_label)
    if _has_label(discourse_data, lambda label: label == cfg.discourse_label) and \
            _has_label(discourse_data, lambda label: label == OUTSIDE_LABEL):
        results[DISCOURSE_MODEL_FILE] = fit(discourse_data, cfg.training, DEFAULT_TEMPLATES)
    else:
        logger.info("No discourse-marker spans in the gold corpus, skipping the discourse model")

    resources = PipelineResources(
        lexicon=lexicon,
        prelim_model=results[PRELIM_MODEL_FILE].model,
        final_model=results[FINAL_MODEL_FILE].model,
        disfluency_model=results[DISFLUENCY_MODEL_FILE].model if DISFLUENCY_MODEL_FILE in results else None,
        discourse_model=results[DISCOURSE_MODEL_FILE].model if DISCOURSE_MODEL_FILE in results else None,
        post_rules=tuple(post_rules),
        tokenizer_config=cfg.tokenizer,
        training_results=results,
    )
    return resources.validate(registry)
