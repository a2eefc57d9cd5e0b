"""
Hierarchical part-of-speech tag-set and disfluency label codes

POS tags have up to three registered levels (category, subcategory, function)
and an optional fourth "extended" level carrying gender/number/person, e.g.
``VER:pres:aux`` or ``NOM:com:fs``.
"""
import functools
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from speech_annotator.config.constants import TAGSET_FILE
from speech_annotator.errors import IllegalMarker, MalformedTag, UnknownCode, UnknownTag

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

# Categories whose tags may carry an extended (4th) level
EXTENDED_CATEGORIES = frozenset({"NOM", "ADJ", "VER", "DET", "PRO"})

TagKey = Tuple[str, Optional[str], Optional[str]]


@dataclass(frozen=True, order=True)
class PosTag:
    category: str
    subcategory: Optional[str] = None
    function: Optional[str] = None
    extended: Optional[str] = None

    def __post_init__(self):
        if not self.category:
            raise MalformedTag("tag category must be non-empty")
        if self.function is not None and self.subcategory is None:
            raise MalformedTag(f"{self.category}: function level requires a subcategory")

    @property
    def key(self) -> TagKey:
        return (self.category, self.subcategory, self.function)

    @property
    def depth(self) -> int:
        return 1 + (self.subcategory is not None) + (self.function is not None)

    def __str__(self):
        return format_pos_tag(self)


class TagRegistry:
    """
    The set of valid (category, subcategory, function) triples with glosses.
    Immutable once built.
    """

    def __init__(self, entries: Dict[TagKey, str], version: Optional[str] = None):
        self._entries = dict(entries)
        self._order = list(entries)
        self.version = version
        self._parsed: Dict[str, PosTag] = {}

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<registry>") -> 'TagRegistry':
        entries: Dict[TagKey, str] = {}
        version = None
        for number, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if "version" in line:
                    version = line.split("version", 1)[1].strip() or None
                continue
            tag_text, _, gloss = line.partition("\t")
            parts = tag_text.strip().split(":")
            if not 1 <= len(parts) <= 3 or any(not part for part in parts):
                raise MalformedTag(f"{source}:{number}: invalid registry tag {tag_text!r}")
            key = tuple(parts) + (None,) * (3 - len(parts))
            if key in entries:
                raise MalformedTag(f"{source}:{number}: duplicate registry tag {tag_text!r}")
            entries[key] = gloss.strip()
        return cls(entries, version=version)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'TagRegistry':
        path = Path(path)
        with path.open(encoding="utf-8") as handle:
            return cls.from_lines(handle, source=str(path))

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[PosTag]:
        for key in self._order:
            yield PosTag(*key)

    def __contains__(self, item) -> bool:
        if isinstance(item, PosTag):
            item = item.key
        return item in self._entries

    def gloss(self, tag: PosTag) -> str:
        return self._entries[tag.key]

    def categories(self) -> List[str]:
        return sorted({key[0] for key in self._entries})

    def validate(self, tag: PosTag) -> PosTag:
        if tag.key not in self._entries:
            raise UnknownTag(f"tag {format_pos_tag(tag)!r} is not in the tag-set")
        if tag.extended is not None:
            if tag.category not in EXTENDED_CATEGORIES:
                raise UnknownTag(f"category {tag.category} has no extended level")
            if not tag.extended or ":" in tag.extended:
                raise MalformedTag(f"invalid extended level {tag.extended!r}")
            # would be read back as a deeper registered level
            deeper = tag.key[:tag.depth] + (tag.extended,)
            if deeper + (None,) * (3 - len(deeper)) in self._entries:
                raise UnknownTag(f"extended level {tag.extended!r} collides with a registered tag")
        return tag

    def parse(self, text: str) -> PosTag:
        cached = self._parsed.get(text)
        if cached is not None:
            return cached
        tag = self._parse(text)
        self._parsed[text] = tag
        return tag

    def _parse(self, text: str) -> PosTag:
        if not isinstance(text, str) or not text.strip():
            raise MalformedTag("empty tag")
        if text != text.strip() or any(ch.isspace() for ch in text):
            raise MalformedTag(f"whitespace in tag {text!r}")
        parts = text.split(":")
        if any(not part for part in parts):
            raise MalformedTag(f"empty level in tag {text!r}")
        # longest registered prefix, at most one trailing extended segment
        for depth in range(min(3, len(parts)), 0, -1):
            key = tuple(parts[:depth]) + (None,) * (3 - depth)
            if key not in self._entries:
                continue
            rest = parts[depth:]
            if not rest:
                return PosTag(*key)
            if len(rest) == 1 and key[0] in EXTENDED_CATEGORIES:
                return PosTag(*key, extended=rest[0])
        raise UnknownTag(f"tag {text!r} is not in the tag-set")


@functools.lru_cache(maxsize=None)
def default_registry() -> TagRegistry:
    """The shipped tag-set"""
    registry = TagRegistry.from_file(DATA_DIR / TAGSET_FILE)
    logger.debug(f"Loaded tag-set version {registry.version} with {len(registry)} tags")
    return registry


def parse_pos_tag(text: str, registry: Optional[TagRegistry] = None) -> PosTag:
    return (registry or default_registry()).parse(text)


def format_pos_tag(tag: PosTag) -> str:
    levels = [tag.category, tag.subcategory, tag.function, tag.extended]
    return ":".join(level for level in levels if level is not None)


def project_pos_tag(tag: Union[PosTag, str], level: int) -> str:
    """Truncate a tag to `level` (1 = category, 2 = subcategory, 3 = function)"""
    if level not in (1, 2, 3):
        raise ValueError(f"projection level must be 1, 2 or 3, got {level}")
    if isinstance(tag, str):
        try:
            tag = default_registry().parse(tag)
        except (MalformedTag, UnknownTag):
            return ":".join(tag.split(":")[:level])
    levels = (tag.category, tag.subcategory, tag.function)[:level]
    return ":".join(part for part in levels if part is not None)


def parse_tag_value(text: str, registry: Optional[TagRegistry] = None) -> Tuple[PosTag, ...]:
    """A tier value: one tag, or several space-separated tags for a concatenated form"""
    parts = text.split()
    if not parts:
        raise MalformedTag("empty tag value")
    return tuple(parse_pos_tag(part, registry) for part in parts)


def project_tag_value(value: str, level: Optional[int]) -> str:
    """Project every tag of a tier value; level None keeps the value as is"""
    if level is None:
        return value
    return " ".join(project_pos_tag(part, level) for part in value.split())


class DisfluencyCode(str, Enum):
    FIL = "FIL"
    LEN = "LEN"
    FST = "FST"
    WDP = "WDP"
    REP = "REP"
    DEL = "DEL"
    SUB = "SUB"
    INS = "INS"
    COM = "COM"
    SIL = "SIL"


class DisfluencyMarker(str, Enum):
    INTERRUPTION_POINT = "*"
    EDITING_TERM = "-E"
    REPAIR = "_"


SIMPLE_CODES = frozenset({DisfluencyCode.FIL, DisfluencyCode.LEN, DisfluencyCode.FST, DisfluencyCode.WDP})
STRUCTURED_CODES = frozenset({
    DisfluencyCode.REP, DisfluencyCode.DEL, DisfluencyCode.SUB, DisfluencyCode.INS, DisfluencyCode.COM,
})


@dataclass(frozen=True)
class DisfluencyLabel:
    code: DisfluencyCode
    marker: Optional[DisfluencyMarker] = None

    def __post_init__(self):
        if self.marker is not None and self.code not in STRUCTURED_CODES:
            raise IllegalMarker(f"{self.code.value} cannot carry a structure marker")

    @property
    def is_simple(self) -> bool:
        return self.code in SIMPLE_CODES

    @property
    def is_structured(self) -> bool:
        return self.code in STRUCTURED_CODES

    def __str__(self):
        return format_disfluency_label(self)


def parse_disfluency_label(text: str) -> DisfluencyLabel:
    """Parse a code immediately followed by at most one marker, e.g. ``REP*``"""
    body = text.strip()
    marker = None
    # "-E" before "_" and "*": none of the markers is a suffix of another
    for candidate in (DisfluencyMarker.EDITING_TERM, DisfluencyMarker.INTERRUPTION_POINT, DisfluencyMarker.REPAIR):
        if body.endswith(candidate.value) and len(body) > len(candidate.value):
            body = body[:-len(candidate.value)]
            marker = candidate
            break
    try:
        code = DisfluencyCode(body)
    except ValueError:
        raise UnknownCode(f"unknown disfluency code {text!r}") from None
    return DisfluencyLabel(code, marker)


def format_disfluency_label(label: DisfluencyLabel) -> str:
    return label.code.value + (label.marker.value if label.marker else "")


def disfluency_code(value: str) -> Optional[DisfluencyCode]:
    """Code of a disfluency tier value, None for empty or unparseable values"""
    if not value:
        return None
    try:
        return parse_disfluency_label(value).code
    except (UnknownCode, IllegalMarker):
        return None
