"""
Conversion between interval tiers and annotation documents
"""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

from speech_annotator.annotation.document import Document, DocumentMetadata, TierValue, Token, new_document
from speech_annotator.config.constants import DISCOURSE, DISFLUENCY, OUTPUT_TIERS, POS_MIN, POS_MWU, TOK_MIN, TOK_MWU
from speech_annotator.errors import InvariantError, OverlapError, ParseError

from .textgrid import Interval, IntervalTier, fill_gaps

logger = logging.getLogger(__name__)

SPEAKER_SEPARATOR = "@"


def tier_name(tier: str, speaker: str = "", multi_speaker: bool = False) -> str:
    return f"{tier}{SPEAKER_SEPARATOR}{speaker}" if multi_speaker and speaker else tier


def find_tier(tiers: Sequence[IntervalTier], name: str, source: str = "<textgrid>") -> IntervalTier:
    for tier in tiers:
        if tier.name == name:
            return tier
    available = ", ".join(repr(tier.name) for tier in tiers) or "none"
    raise ParseError(f"no interval tier named {name!r} (available: {available})", source=source)


def document_to_tiers(doc: Document, xmin: float = 0.0, xmax: Optional[float] = None,
                      multi_speaker: bool = False) -> List[IntervalTier]:
    """The six output tiers of a document, gaps filled with empty intervals"""
    tokens = doc.tokens
    speaker = tokens[0].speaker if tokens else ""
    if tokens:
        xmin = min(xmin, tokens[0].t_min)
        xmax = max(xmax if xmax is not None else tokens[-1].t_max, tokens[-1].t_max)
    elif xmax is None:
        xmax = xmin

    def span_interval(value: TierValue) -> Interval:
        return Interval(tokens[value.start].t_min, tokens[value.end - 1].t_max, value.value)

    contents = {
        TOK_MIN: [Interval(token.t_min, token.t_max, token.text) for token in tokens],
        POS_MIN: [span_interval(value) for value in doc.tiers[POS_MIN]],
        DISFLUENCY: [span_interval(value) for value in doc.tiers[DISFLUENCY]],
        TOK_MWU: [span_interval(value) for value in doc.tiers[TOK_MWU]],
        POS_MWU: [span_interval(value) for value in doc.tiers[POS_MWU]],
        DISCOURSE: [span_interval(value) for value in doc.tiers[DISCOURSE]],
    }
    return [
        IntervalTier(tier_name(name, speaker, multi_speaker), xmin, xmax, fill_gaps(contents[name], xmin, xmax))
        for name in OUTPUT_TIERS
    ]


def _time_key(value: float) -> float:
    return round(value, 6)


class _TokenIndex:
    """Token positions by start and end time, for aligning tier intervals"""

    def __init__(self, tokens: Sequence[Token]):
        self.starts: Dict[float, int] = {}
        self.ends: Dict[float, int] = {}
        for i, token in enumerate(tokens):
            self.starts.setdefault(_time_key(token.t_min), i)
            self.ends[_time_key(token.t_max)] = i

    def span(self, interval: Interval, tier: str) -> Tuple[int, int]:
        start = self.starts.get(_time_key(interval.xmin))
        last = self.ends.get(_time_key(interval.xmax))
        if start is None or last is None or last < start:
            raise InvariantError(f"{tier}: interval [{interval.xmin}, {interval.xmax}] "
                                 f"{interval.text!r} is not aligned with tok-min")
        return start, last + 1


def _partition(spans: List[TierValue], n: int, default, tier: str, strict: bool = True) -> List[TierValue]:
    """Complete sparse spans into a partition of [0, n) using singleton defaults"""
    result: List[TierValue] = []
    cursor = 0
    for value in sorted(spans, key=lambda v: v.start):
        if value.start < cursor and strict:
            raise InvariantError(f"{tier}: overlapping spans at token {value.start}")
        result.extend(TierValue(i, i + 1, default(i)) for i in range(cursor, value.start))
        result.append(value)
        cursor = max(cursor, value.end)
    result.extend(TierValue(i, i + 1, default(i)) for i in range(cursor, n))
    return result


def document_from_tiers(tiers: Sequence[IntervalTier], metadata: Optional[DocumentMetadata] = None,
                        speaker: str = "", multi_speaker: bool = False, repair: bool = True) -> Document:
    """
    Rebuild a document from its six tiers; only tok-min is mandatory.

    With `repair` off the spans are kept as written: tok-mwu gaps stay gaps,
    multi-token pos-min or disfluency values stay whole and overlapping
    tokens are accepted, so that `validate` lists what is broken.
    """
    metadata = metadata or DocumentMetadata()
    by_name = {tier.name: tier for tier in tiers}
    tok_tier = by_name.get(tier_name(TOK_MIN, speaker, multi_speaker))
    if tok_tier is None:
        raise ParseError(f"no {tier_name(TOK_MIN, speaker, multi_speaker)!r} tier")
    tokens = [
        Token(interval.text, interval.xmin, interval.xmax, speaker=speaker,
              is_pause=interval.text == metadata.pause_symbol)
        for interval in tok_tier.non_empty()
    ]
    try:
        doc = new_document(tokens, metadata, check_timing=repair)
    except OverlapError as e:
        raise InvariantError(str(e)) from None
    index = _TokenIndex(tokens)

    def spans(name: str) -> Optional[List[TierValue]]:
        tier = by_name.get(tier_name(name, speaker, multi_speaker))
        if tier is None:
            return None
        values = (TierValue(*index.span(interval, name), interval.text) for interval in tier.non_empty())
        return sorted(values, key=lambda v: (v.start, v.end))

    for name in (POS_MIN, DISFLUENCY):
        values = spans(name)
        if values is None:
            continue
        if not repair:
            doc.tiers[name] = _partition(values, len(tokens), lambda i: "", name, strict=False)
            continue
        column = [""] * len(tokens)
        for value in values:
            if value.end - value.start != 1:
                raise InvariantError(f"{name}: value {value.value!r} spans several tokens")
            column[value.start] = value.value
        doc.tiers[name] = [TierValue(i, i + 1, v) for i, v in enumerate(column)]

    units = spans(TOK_MWU)
    if units is not None:
        doc.tiers[TOK_MWU] = _partition(units, len(tokens), lambda i: tokens[i].text, TOK_MWU) if repair else units
    tags = spans(POS_MWU) or []
    by_span = {value.span: value.value for value in tags}
    doc.tiers[POS_MWU] = [TierValue(unit.start, unit.end, by_span.get(unit.span, "")) for unit in doc.tiers[TOK_MWU]]
    if not repair:
        # pos-mwu values off every unit boundary
        unit_spans = {unit.span for unit in doc.tiers[TOK_MWU]}
        stray = [value for value in tags if value.span not in unit_spans]
        doc.tiers[POS_MWU] = sorted(doc.tiers[POS_MWU] + stray, key=lambda v: (v.start, v.end))
    discourse = spans(DISCOURSE)
    if discourse is not None:
        doc.tiers[DISCOURSE] = discourse
    return doc


def speakers_in(tiers: Sequence[IntervalTier]) -> List[str]:
    """Speaker suffixes of six-tier output (empty string for unsuffixed tiers)"""
    speakers = set()
    for tier in tiers:
        base, sep, speaker = tier.name.partition(SPEAKER_SEPARATOR)
        if base == TOK_MIN:
            speakers.add(speaker if sep else "")
    return sorted(speakers)


def speaker_intervals(tiers: Sequence[IntervalTier], transcription_tier: str,
                      speaker_tier: Optional[str] = None, source: str = "<textgrid>") -> Dict[str, List[Interval]]:
    """
    Transcription intervals per speaker. Without a speaker tier every interval
    belongs to speaker "". With one, each interval goes to the speaker label
    overlapping it the longest. Empty intervals are dropped: the tokenizer
    turns the gaps they leave into pauses.
    """
    transcription = find_tier(tiers, transcription_tier, source)
    labels = find_tier(tiers, speaker_tier, source).non_empty() if speaker_tier else []
    grouped: Dict[str, List[Interval]] = defaultdict(list)
    for interval in transcription.non_empty():
        speaker = ""
        best = 0.0
        for label in labels:
            overlap = min(interval.xmax, label.xmax) - max(interval.xmin, label.xmin)
            if overlap > best:
                best, speaker = overlap, label.text.strip()
        if labels and not speaker:
            logger.warning(f"{source}: no speaker label overlaps [{interval.xmin}, {interval.xmax}]")
        grouped[speaker].append(interval)
    return dict(grouped)
