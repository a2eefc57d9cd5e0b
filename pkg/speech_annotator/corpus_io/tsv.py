"""
Tab-separated token files: one row per minimal token

Multi-word unit and discourse values are repeated on every covered row and
grouped back through the ``mwu-id`` / ``discourse-id`` columns. Optional
``# key<TAB>value`` lines before the header carry document metadata.
"""
import csv
import io
import logging
from typing import Dict, List, Optional, Sequence, Tuple

from speech_annotator.annotation.document import Document, DocumentMetadata, TierValue, Token, new_document
from speech_annotator.config.constants import (
    DEFAULT_PAUSE_SYMBOL,
    DISCOURSE,
    DISFLUENCY,
    POS_MIN,
    POS_MWU,
    TOK_MIN,
    TOK_MWU,
)
from speech_annotator.errors import EncodingError, MissingColumn, OverlapError, ParseError

logger = logging.getLogger(__name__)

T_MIN = "tMin"
T_MAX = "tMax"
SPEAKER = "speaker"
MWU_ID = "mwu-id"
DISCOURSE_ID = "discourse-id"
TOKEN_FLAGS = "token-flags"
SURFACE = "surface"

COLUMNS = (T_MIN, T_MAX, SPEAKER, TOK_MIN, POS_MIN, DISFLUENCY, TOK_MWU, POS_MWU, MWU_ID,
           DISCOURSE, DISCOURSE_ID, TOKEN_FLAGS, SURFACE)
REQUIRED_COLUMNS = (T_MIN, T_MAX, TOK_MIN)

# token-flags vocabulary
FLAG_PAUSE = "pause"
FLAG_FALSE_START = "falseStart"
FLAG_INTRA_WORD_PAUSE = "intraWordPause"
FLAG_ATTACHED = "attached"
FLAG_PAUSE_CLASS = "pauseClass="

META_SAMPLE = "sample"
META_SUBCORPUS = "subcorpus"
META_PAUSE_SYMBOL = "pause-symbol"
META_TIMED = "timed"


def _format_flags(token: Token) -> str:
    flags = []
    if token.is_pause:
        flags.append(FLAG_PAUSE)
    if token.false_start:
        flags.append(FLAG_FALSE_START)
    if token.intra_word_pause:
        flags.append(FLAG_INTRA_WORD_PAUSE)
    if token.attached:
        flags.append(FLAG_ATTACHED)
    if token.pause_class:
        flags.append(FLAG_PAUSE_CLASS + token.pause_class)
    return ",".join(flags)


def _parse_flags(text: str, line: int, source: str) -> Dict[str, object]:
    fields: Dict[str, object] = {}
    for flag in filter(None, (part.strip() for part in text.split(","))):
        if flag == FLAG_PAUSE:
            fields["is_pause"] = True
        elif flag == FLAG_FALSE_START:
            fields["false_start"] = True
        elif flag == FLAG_INTRA_WORD_PAUSE:
            fields["intra_word_pause"] = True
        elif flag == FLAG_ATTACHED:
            fields["attached"] = True
        elif flag.startswith(FLAG_PAUSE_CLASS) and len(flag) > len(FLAG_PAUSE_CLASS):
            fields["pause_class"] = flag[len(FLAG_PAUSE_CLASS):]
        else:
            raise ParseError(f"unknown token flag {flag!r}", line=line, source=source)
    return fields


def write_tsv(doc: Document) -> bytes:
    extra_columns = sorted({key for token in doc.tokens for key in token.extra} - set(COLUMNS))
    mwu_of = [0] * len(doc.tokens)
    for k, unit in enumerate(doc.tiers[TOK_MWU]):
        for i in range(unit.start, unit.end):
            mwu_of[i] = k
    discourse_of: Dict[int, Tuple[int, str]] = {}
    for k, span in enumerate(doc.tiers[DISCOURSE]):
        for i in range(span.start, span.end):
            discourse_of[i] = (k, span.value)

    buffer = io.StringIO()
    meta = doc.metadata
    if meta.sample_id:
        buffer.write(f"# {META_SAMPLE}\t{meta.sample_id}\n")
    if meta.subcorpus_id:
        buffer.write(f"# {META_SUBCORPUS}\t{meta.subcorpus_id}\n")
    if meta.pause_symbol != DEFAULT_PAUSE_SYMBOL:
        buffer.write(f"# {META_PAUSE_SYMBOL}\t{meta.pause_symbol}\n")
    if not doc.timed:
        buffer.write(f"# {META_TIMED}\tfalse\n")

    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(list(COLUMNS) + extra_columns)
    pos_min = doc.values(POS_MIN)
    disfluency = doc.values(DISFLUENCY)
    for i, token in enumerate(doc.tokens):
        unit = doc.tiers[TOK_MWU][mwu_of[i]]
        unit_tag = doc.tiers[POS_MWU][mwu_of[i]]
        discourse_id, discourse_value = discourse_of.get(i, ("", ""))
        writer.writerow([
            repr(token.t_min), repr(token.t_max), token.speaker, token.text, pos_min[i], disfluency[i],
            unit.value, unit_tag.value, mwu_of[i], discourse_value, discourse_id,
            _format_flags(token), token.surface if token.surface is not None else "",
        ] + [token.extra.get(column, "") for column in extra_columns])
    return buffer.getvalue().encode("utf-8")


def _read_metadata(lines: List[str], source: str) -> Tuple[DocumentMetadata, bool, int]:
    values: Dict[str, str] = {}
    consumed = 0
    for number, line in enumerate(lines, start=1):
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("\t")
        if not sep:
            raise ParseError("metadata lines must read '# key<TAB>value'", line=number, source=source)
        values[key.strip()] = value
        consumed = number
    metadata = DocumentMetadata(
        sample_id=values.get(META_SAMPLE, ""),
        subcorpus_id=values.get(META_SUBCORPUS, ""),
        pause_symbol=values.get(META_PAUSE_SYMBOL, DEFAULT_PAUSE_SYMBOL),
    )
    timed = values.get(META_TIMED, "true").lower() != "false"
    return metadata, timed, consumed


def _group_runs(ids: Sequence[str], column: str, lines: Sequence[int], source: str) -> List[Tuple[str, int, int]]:
    """Contiguous runs of equal non-empty ids as (id, start, end)"""
    runs: List[Tuple[str, int, int]] = []
    seen = set()
    for i, span_id in enumerate(ids):
        if not span_id:
            continue
        if runs and runs[-1][0] == span_id and runs[-1][2] == i:
            runs[-1] = (span_id, runs[-1][1], i + 1)
            continue
        if span_id in seen:
            raise ParseError(f"{column} {span_id!r} is not contiguous", line=lines[i], source=source)
        seen.add(span_id)
        runs.append((span_id, i, i + 1))
    return runs


def read_tsv(data: bytes, source: str = "<tsv>", pause_symbol: Optional[str] = None) -> Document:
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise EncodingError(f"{source}: not valid UTF-8: {e.reason}") from None
    lines = text.split("\n")
    metadata, timed, offset = _read_metadata(lines, source)
    if pause_symbol is not None:
        metadata = DocumentMetadata(metadata.sample_id, metadata.subcorpus_id, pause_symbol)
    body = "\n".join(lines[offset:])
    if not body.strip():
        raise ParseError("missing header row", line=offset + 1, source=source)

    reader = csv.reader(io.StringIO(body), delimiter="\t", strict=True)
    rows: List[List[str]] = []
    row_lines: List[int] = []
    try:
        header = next(reader)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}",
                                 line=reader.line_num + offset, source=source)
            rows.append(row)
            row_lines.append(reader.line_num + offset)
    except csv.Error as e:
        raise ParseError(str(e), line=reader.line_num + offset, source=source) from None

    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", line=offset + 1, source=source)
    for column in REQUIRED_COLUMNS:
        if column not in header:
            raise MissingColumn(f"{source}: missing column {column!r}")
    position = {name: k for k, name in enumerate(header)}
    extra_columns = [name for name in header if name not in COLUMNS]

    def cell(row: List[str], column: str, default: str = "") -> str:
        k = position.get(column)
        return row[k] if k is not None else default

    tokens: List[Token] = []
    for row, line in zip(rows, row_lines):
        try:
            t_min, t_max = float(cell(row, T_MIN)), float(cell(row, T_MAX))
        except ValueError:
            raise ParseError("tMin and tMax must be numbers", line=line, source=source) from None
        text_value = cell(row, TOK_MIN)
        if TOKEN_FLAGS in position:
            flags = _parse_flags(cell(row, TOKEN_FLAGS), line, source)
        else:
            flags = {"is_pause": text_value == metadata.pause_symbol}
        surface = cell(row, SURFACE)
        extra = {name: row[position[name]] for name in extra_columns if row[position[name]]}
        tokens.append(Token(text_value, t_min, t_max, speaker=cell(row, SPEAKER),
                            surface=surface or None, extra=extra, **flags))

    try:
        doc = new_document(tokens, metadata, timed=timed)
    except OverlapError as e:
        raise ParseError(str(e), source=source) from None

    for tier in (POS_MIN, DISFLUENCY):
        if tier in position:
            doc.tiers[tier] = [TierValue(i, i + 1, row[position[tier]]) for i, row in enumerate(rows)]

    if MWU_ID in position:
        runs = _group_runs([row[position[MWU_ID]] for row in rows], MWU_ID, row_lines, source)
        covered = sum(end - start for _, start, end in runs)
        if covered != len(rows):
            missing = next(i for i, row in enumerate(rows) if not row[position[MWU_ID]])
            raise ParseError("empty mwu-id", line=row_lines[missing], source=source)
        doc.tiers[TOK_MWU] = [
            TierValue(start, end, cell(rows[start], TOK_MWU) if TOK_MWU in position
                      else " ".join(t.text for t in tokens[start:end]))
            for _, start, end in runs
        ]
        doc.tiers[POS_MWU] = [TierValue(start, end, cell(rows[start], POS_MWU)) for _, start, end in runs]
    else:
        if TOK_MWU in position:
            doc.tiers[TOK_MWU] = [TierValue(i, i + 1, row[position[TOK_MWU]]) for i, row in enumerate(rows)]
        if POS_MWU in position:
            doc.tiers[POS_MWU] = [TierValue(i, i + 1, row[position[POS_MWU]]) for i, row in enumerate(rows)]

    if DISCOURSE in position:
        if DISCOURSE_ID in position:
            runs = _group_runs([row[position[DISCOURSE_ID]] for row in rows], DISCOURSE_ID, row_lines, source)
            doc.tiers[DISCOURSE] = [TierValue(start, end, cell(rows[start], DISCOURSE)) for _, start, end in runs]
        else:
            doc.tiers[DISCOURSE] = [TierValue(i, i + 1, row[position[DISCOURSE]])
                                    for i, row in enumerate(rows) if row[position[DISCOURSE]]]
    logger.debug(f"Read {len(tokens)} tokens from {source}")
    return doc
