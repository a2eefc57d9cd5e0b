"""
Per-token attribute maps fed to the CRF feature templates
"""
from typing import List, Optional, Sequence

from speech_annotator.annotation.document import Document
from speech_annotator.config import PAUSE_SHORT
from speech_annotator.preprocessing.lexicon import Candidates, Lexicon
from speech_annotator.tagging.features import MISSING, LabeledSequence, position_attributes


def _pause_class(doc: Document, j: int) -> str:
    if 0 <= j < len(doc.tokens) and doc.tokens[j].is_pause:
        return doc.tokens[j].pause_class or PAUSE_SHORT
    return MISSING


def mwu_attributes(doc: Document, lexicon: Lexicon) -> List[str]:
    """``B-tag`` / ``I-tag`` for tokens under the longest dictionary MWU match, greedy left to right"""
    values = [MISSING] * len(doc.tokens)
    i = 0
    while i < len(doc.tokens):
        matches = lexicon.mwu_matches(doc.tokens, i, doc.metadata.pause_symbol)
        if not matches:
            i += 1
            continue
        best = matches[0]
        values[i] = f"B-{best.tag}"
        for j in range(i + 1, i + best.length):
            values[j] = f"I-{best.tag}"
        i += best.length
    return values


def token_sequence(doc: Document, indices: Sequence[int], candidates: Sequence[Candidates],
                   mwu: Optional[Sequence[str]] = None, labels: Optional[Sequence[str]] = None) -> LabeledSequence:
    """CRF input over the document tokens at `indices`"""
    positions = []
    for i in indices:
        token = doc.tokens[i]
        positions.append(position_attributes(
            token.text,
            candidates=candidates[i].feature_value(),
            pause_before=_pause_class(doc, i - 1),
            pause_after=_pause_class(doc, i + 1),
            false_start=token.false_start,
            mwu=mwu[i] if mwu is not None else MISSING,
        ))
    return LabeledSequence(positions, list(labels) if labels is not None else None)
