"""
Praat TextGrid reading and writing (long text format)
"""
import codecs
import logging
import re
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Dict, List, Match, Optional, Pattern, Sequence

from speech_annotator.errors import EncodingError, InvariantError, ParseError

logger = logging.getLogger(__name__)

Interval = namedtuple("Interval", ["xmin", "xmax", "text"])

INTERVAL_TIER = "IntervalTier"
POINT_TIER = "TextTier"
TIME_TOLERANCE = 1e-9

_WHITESPACE = re.compile(r"\s*")
_NUMBER = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_STRING = r'"([^"]*(?:""[^"]*)*)"'
_FILE_TYPE = re.compile(r'File\s+type\s*=\s*"ooTextFile"')
_OBJECT_CLASS = re.compile(r'Object\s+class\s*=\s*"TextGrid"')
_SHORT_FORMAT = re.compile(_NUMBER)
_TIERS_EXIST = re.compile(r"tiers\?\s*<(exists|absent)>")
_ITEM_LIST = re.compile(r"item\s*\[\s*\]\s*:")
_ITEM = re.compile(r"item\s*\[\s*\d+\s*\]\s*:")
_SIZE = re.compile(r"size\s*=\s*(\d+)")
_INTERVALS_SIZE = re.compile(r"intervals\s*:\s*size\s*=\s*(\d+)")
_INTERVAL = re.compile(r"intervals\s*\[\s*\d+\s*\]\s*:")
_POINTS_SIZE = re.compile(r"points\s*:\s*size\s*=\s*(\d+)")
_POINT = re.compile(r"points\s*\[\s*\d+\s*\]\s*:")
_FIELD_PATTERNS: Dict[str, Pattern] = {}


def _field(key: str, value_pattern: str) -> Pattern:
    cache_key = key + value_pattern
    if cache_key not in _FIELD_PATTERNS:
        _FIELD_PATTERNS[cache_key] = re.compile(re.escape(key) + r"\s*=\s*" + value_pattern)
    return _FIELD_PATTERNS[cache_key]


@dataclass
class IntervalTier:
    name: str
    xmin: float
    xmax: float
    intervals: List[Interval] = field(default_factory=list)

    def non_empty(self) -> List[Interval]:
        return [interval for interval in self.intervals if interval.text.strip()]


def decode_textgrid(data: bytes, source: str = "<textgrid>") -> str:
    if data.startswith(codecs.BOM_UTF16_LE) or data.startswith(codecs.BOM_UTF16_BE):
        encoding = "utf-16"
    elif data.startswith(codecs.BOM_UTF8):
        encoding = "utf-8-sig"
    elif len(data) >= 2 and data[0] != 0 and data[1] == 0:
        encoding = "utf-16-le"
    elif len(data) >= 2 and data[0] == 0 and data[1] != 0:
        encoding = "utf-16-be"
    else:
        encoding = "utf-8"
    try:
        return data.decode(encoding)
    except UnicodeDecodeError as e:
        raise EncodingError(f"{source}: cannot decode as {encoding}: {e.reason}") from None


class _LongFormatReader:

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(message, line=self.text.count("\n", 0, self.pos) + 1, source=self.source)

    def accept(self, pattern: Pattern) -> Optional[Match]:
        self.pos = _WHITESPACE.match(self.text, self.pos).end()
        match = pattern.match(self.text, self.pos)
        if match:
            self.pos = match.end()
        return match

    def expect(self, pattern: Pattern, what: str) -> Match:
        match = self.accept(pattern)
        if match is None:
            raise self.error(f"expected {what}")
        return match

    def number(self, key: str) -> float:
        value = float(self.expect(_field(key, _NUMBER), f"'{key} = <number>'").group(1))
        if value != value or value in (float("inf"), float("-inf")):
            raise self.error(f"non-finite value for {key}")
        return value

    def string(self, key: str) -> str:
        return self.expect(_field(key, _STRING), f"'{key} = \"...\"'").group(1).replace('""', '"')

    def at_end(self) -> bool:
        self.pos = _WHITESPACE.match(self.text, self.pos).end()
        return self.pos >= len(self.text)

    def read(self) -> List[IntervalTier]:
        self.expect(_FILE_TYPE, 'File type = "ooTextFile"')
        self.expect(_OBJECT_CLASS, 'Object class = "TextGrid"')
        if self.accept(_SHORT_FORMAT):
            raise self.error("short-format TextGrids are not supported, save as text file (long format)")
        self.number("xmin")
        self.number("xmax")
        exists = self.expect(_TIERS_EXIST, "'tiers? <exists>'").group(1) == "exists"
        tiers: List[IntervalTier] = []
        if exists:
            size = int(self.expect(_SIZE, "'size = <n>'").group(1))
            if size:
                self.expect(_ITEM_LIST, "'item []:'")
            else:
                self.accept(_ITEM_LIST)
            for _ in range(size):
                tier = self._read_tier()
                if tier is not None:
                    tiers.append(tier)
        if not self.at_end():
            raise self.error("unexpected content after the last tier")
        return tiers

    def _read_tier(self) -> Optional[IntervalTier]:
        self.expect(_ITEM, "'item [<n>]:'")
        tier_class = self.string("class")
        name = self.string("name")
        xmin = self.number("xmin")
        xmax = self.number("xmax")
        if tier_class == INTERVAL_TIER:
            count = int(self.expect(_INTERVALS_SIZE, "'intervals: size = <n>'").group(1))
            intervals = []
            for _ in range(count):
                self.expect(_INTERVAL, "'intervals [<n>]:'")
                start = self.number("xmin")
                end = self.number("xmax")
                intervals.append(Interval(start, end, self.string("text")))
            return IntervalTier(name, xmin, xmax, intervals)
        if tier_class == POINT_TIER:
            count = int(self.expect(_POINTS_SIZE, "'points: size = <n>'").group(1))
            for _ in range(count):
                self.expect(_POINT, "'points [<n>]:'")
                if not self.accept(_field("number", _NUMBER)):
                    self.number("time")
                self.string("mark")
            logger.warning(f"{self.source}: skipping point tier {name!r}")
            return None
        raise self.error(f"unsupported tier class {tier_class!r}")


def read_textgrid(data: bytes, source: str = "<textgrid>") -> List[IntervalTier]:
    """Interval tiers of a long-format TextGrid (UTF-8 or UTF-16); point tiers are skipped"""
    text = decode_textgrid(data, source)
    reader = _LongFormatReader(text, source)
    try:
        return reader.read()
    except (ValueError, OverflowError, MemoryError) as e:
        raise reader.error(f"invalid value: {e}") from None


def check_tier(tier: IntervalTier) -> None:
    if tier.xmin > tier.xmax:
        raise InvariantError(f"tier {tier.name!r}: xmin {tier.xmin} > xmax {tier.xmax}")
    previous_end = None
    for k, interval in enumerate(tier.intervals):
        if interval.xmin > interval.xmax:
            raise InvariantError(f"tier {tier.name!r}: interval {k + 1} ends before it starts")
        if interval.xmin < tier.xmin - TIME_TOLERANCE or interval.xmax > tier.xmax + TIME_TOLERANCE:
            raise InvariantError(f"tier {tier.name!r}: interval {k + 1} outside the tier bounds")
        if previous_end is not None:
            if interval.xmin < previous_end - TIME_TOLERANCE:
                raise InvariantError(f"tier {tier.name!r}: interval {k + 1} overlaps interval {k}")
            if interval.xmin > previous_end + TIME_TOLERANCE:
                raise InvariantError(f"tier {tier.name!r}: gap before interval {k + 1}")
        previous_end = interval.xmax


def fill_gaps(intervals: Sequence[Interval], xmin: float, xmax: float) -> List[Interval]:
    """Make intervals contiguous over [xmin, xmax] with empty-text intervals"""
    filled: List[Interval] = []
    cursor = xmin
    for interval in sorted(intervals, key=lambda iv: (iv.xmin, iv.xmax)):
        if interval.xmin > cursor + TIME_TOLERANCE:
            filled.append(Interval(cursor, interval.xmin, ""))
        filled.append(interval)
        cursor = max(cursor, interval.xmax)
    if xmax > cursor + TIME_TOLERANCE:
        filled.append(Interval(cursor, xmax, ""))
    return filled


def format_time(value: float) -> str:
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def _escape(text: str) -> str:
    return text.replace('"', '""')


def write_textgrid(tiers: Sequence[IntervalTier], xmin: Optional[float] = None,
                   xmax: Optional[float] = None) -> bytes:
    for tier in tiers:
        check_tier(tier)
    if xmin is None:
        xmin = min((tier.xmin for tier in tiers), default=0.0)
    if xmax is None:
        xmax = max((tier.xmax for tier in tiers), default=xmin)
    tab = " " * 4
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {format_time(xmin)} ",
        f"xmax = {format_time(xmax)} ",
    ]
    if not tiers:
        lines.append("tiers? <absent> ")
    else:
        lines.append("tiers? <exists> ")
        lines.append(f"size = {len(tiers)} ")
        lines.append("item []: ")
    for number, tier in enumerate(tiers, start=1):
        lines.append(f"{tab}item [{number}]:")
        lines.append(f'{tab * 2}class = "{INTERVAL_TIER}" ')
        lines.append(f'{tab * 2}name = "{_escape(tier.name)}" ')
        lines.append(f"{tab * 2}xmin = {format_time(tier.xmin)} ")
        lines.append(f"{tab * 2}xmax = {format_time(tier.xmax)} ")
        lines.append(f"{tab * 2}intervals: size = {len(tier.intervals)} ")
        for k, interval in enumerate(tier.intervals, start=1):
            lines.append(f"{tab * 2}intervals [{k}]:")
            lines.append(f"{tab * 3}xmin = {format_time(interval.xmin)} ")
            lines.append(f"{tab * 3}xmax = {format_time(interval.xmax)} ")
            lines.append(f'{tab * 3}text = "{_escape(interval.text)}" ')
    return ("\n".join(lines) + "\n").encode("utf-8")
