"""
Lexicon: candidate POS tags per form, multi-word units and marker flags

File format, one entry per line (UTF-8)::

    form<TAB>tag1|tag2|...<TAB>flags

`flags` is an optional comma-separated list of ``fil`` (filled pause) and
``dm`` (discourse-marker candidate). A form containing spaces is a
multi-word unit entry and is indexed in a token trie.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

from speech_annotator.annotation.document import Token
from speech_annotator.annotation.tagset import TagRegistry, default_registry, format_pos_tag, parse_tag_value
from speech_annotator.config import DEFAULT_PAUSE_SYMBOL
from speech_annotator.errors import InvalidTag, MalformedTag, ParseError, UnknownTag

logger = logging.getLogger(__name__)

FLAG_FILLED_PAUSE = "fil"
FLAG_DISCOURSE_MARKER = "dm"
KNOWN_FLAGS = frozenset({FLAG_FILLED_PAUSE, FLAG_DISCOURSE_MARKER})
PROPER_NOUN = ("NOM", "pro")


@dataclass(frozen=True)
class Candidates:
    tags: FrozenSet[str] = frozenset()
    filled_pause: bool = False
    discourse_marker: bool = False

    def __bool__(self):
        return bool(self.tags) or self.filled_pause or self.discourse_marker

    def __len__(self):
        return len(self.tags)

    def merge(self, other: 'Candidates') -> 'Candidates':
        return Candidates(self.tags | other.tags, self.filled_pause or other.filled_pause,
                          self.discourse_marker or other.discourse_marker)

    def feature_value(self) -> str:
        """Sorted candidate tags as one string; ``-`` for unknown forms"""
        return "|".join(sorted(self.tags)) or "-"


NO_CANDIDATES = Candidates()


@dataclass(frozen=True)
class MwuMatch:
    length: int
    tag: str
    discourse_marker: bool = False


@dataclass
class _TrieNode:
    children: Dict[str, '_TrieNode'] = field(default_factory=dict)
    # tag -> discourse-marker flag of the entry ending here
    entries: Dict[str, bool] = field(default_factory=dict)


class Lexicon:
    """Single-word entries plus a trie of multi-word entries; treat as read-only once loaded"""

    def __init__(self, case_folding: bool = True):
        self.case_folding = case_folding
        self._entries: Dict[str, Candidates] = {}
        # proper nouns keep their case
        self._exact: Dict[str, Candidates] = {}
        self._root = _TrieNode()
        self._mwu_count = 0

    def fold(self, form: str) -> str:
        return form.casefold() if self.case_folding else form

    def __len__(self):
        return len(self._entries) + len(self._exact)

    def __contains__(self, form: str) -> bool:
        return bool(self.lookup(form))

    @property
    def mwu_count(self) -> int:
        return self._mwu_count

    def add(self, form: str, tags: Iterable[str] = (), filled_pause: bool = False,
            discourse_marker: bool = False) -> None:
        tags = frozenset(tags)
        words = form.split()
        if len(words) > 1:
            for tag in tags:
                self.add_mwu(words, tag, discourse_marker)
            return
        entry = Candidates(tags, filled_pause, discourse_marker)
        proper = tags and all(tag.split(":")[:2] == list(PROPER_NOUN) for tag in tags)
        if self.case_folding and proper:
            table, key = self._exact, form
        else:
            table, key = self._entries, self.fold(form)
        table[key] = table[key].merge(entry) if key in table else entry

    def add_mwu(self, words: Sequence[str], tag: str, discourse_marker: bool = False) -> None:
        if len(words) < 2:
            raise ValueError("multi-word units need at least two tokens")
        node = self._root
        for word in words:
            node = node.children.setdefault(self.fold(word), _TrieNode())
        if tag not in node.entries:
            self._mwu_count += 1
        node.entries[tag] = node.entries.get(tag, False) or discourse_marker

    def lookup(self, form: str) -> Candidates:
        """Candidates of a form after case folding; empty for unknown forms"""
        found = self._entries.get(self.fold(form), NO_CANDIDATES)
        exact = self._exact.get(form)
        return found.merge(exact) if exact is not None else found

    def iter_entries(self) -> Iterator[Tuple[str, Candidates]]:
        for form in sorted(self._entries):
            yield form, self._entries[form]
        for form in sorted(self._exact):
            yield form, self._exact[form]

    def iter_mwu(self) -> Iterator[Tuple[Tuple[str, ...], str, bool]]:
        """Every multi-word entry as (folded words, tag, discourse-marker flag)"""
        stack: List[Tuple[Tuple[str, ...], _TrieNode]] = [((), self._root)]
        while stack:
            words, node = stack.pop()
            for tag in sorted(node.entries):
                yield words, tag, node.entries[tag]
            for word in sorted(node.children, reverse=True):
                stack.append((words + (word,), node.children[word]))

    def mwu_matches(self, tokens: Sequence[Union[Token, str]], i: int,
                    pause_symbol: str = DEFAULT_PAUSE_SYMBOL) -> List[MwuMatch]:
        """Multi-word entries starting at token i, longest first; pauses block a match"""
        matches: List[MwuMatch] = []
        node = self._root
        for j in range(i, len(tokens)):
            token = tokens[j]
            text = token.text if isinstance(token, Token) else token
            if text == pause_symbol or (isinstance(token, Token) and token.is_pause):
                break
            node = node.children.get(self.fold(text))
            if node is None:
                break
            length = j - i + 1
            if length >= 2:
                matches.extend(MwuMatch(length, tag, dm) for tag, dm in node.entries.items())
        return sorted(matches, key=lambda match: (-match.length, match.tag))


def lookup(lexicon: Lexicon, form: str) -> Candidates:
    return lexicon.lookup(form)


def mwu_matches(lexicon: Lexicon, tokens: Sequence[Union[Token, str]], i: int,
                pause_symbol: str = DEFAULT_PAUSE_SYMBOL) -> List[MwuMatch]:
    return lexicon.mwu_matches(tokens, i, pause_symbol)


def _parse_line(line: str, number: int, source: str, registry: TagRegistry) -> Tuple[str, List[str], Set[str]]:
    fields = line.split("\t")
    if len(fields) not in (2, 3) or not fields[0].strip() or not fields[1].strip():
        raise ParseError("expected 'form<TAB>tags[<TAB>flags]'", line=number, source=source)
    form = " ".join(fields[0].split())
    tags = []
    for text in fields[1].split("|"):
        text = text.strip()
        try:
            tags.append(" ".join(format_pos_tag(tag) for tag in parse_tag_value(text, registry)))
        except (MalformedTag, UnknownTag) as e:
            raise InvalidTag(f"{source}:{number}: {e}") from None
    flags = {flag.strip() for flag in fields[2].split(",") if flag.strip()} if len(fields) == 3 else set()
    unknown = flags - KNOWN_FLAGS
    if unknown:
        raise ParseError(f"unknown flags {sorted(unknown)}", line=number, source=source)
    return form, tags, flags


def load_lexicon(files: Iterable[Union[str, Path]], case_folding: bool = True,
                 registry: Optional[TagRegistry] = None) -> Lexicon:
    """Merge lexicon files: tags are unioned per form and flags OR-ed"""
    registry = registry or default_registry()
    lexicon = Lexicon(case_folding=case_folding)
    for path in files:
        path = Path(path)
        with path.open(encoding="utf-8") as handle:
            for number, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n").rstrip("\r")
                if not line.strip() or line.startswith("#"):
                    continue
                form, tags, flags = _parse_line(line, number, str(path), registry)
                lexicon.add(form, tags, filled_pause=FLAG_FILLED_PAUSE in flags,
                            discourse_marker=FLAG_DISCOURSE_MARKER in flags)
        logger.debug(f"Loaded lexicon file {path}")
    logger.info(f"Lexicon: {len(lexicon)} forms, {lexicon.mwu_count} multi-word entries")
    return lexicon


def dump_lexicon(lexicon: Lexicon) -> str:
    """Lexicon file text for every entry, multi-word units included"""
    lines = []
    for form, entry in lexicon.iter_entries():
        flags = [flag for flag, on in ((FLAG_FILLED_PAUSE, entry.filled_pause),
                                       (FLAG_DISCOURSE_MARKER, entry.discourse_marker)) if on]
        lines.append("\t".join([form, "|".join(sorted(entry.tags)), ",".join(flags)]).rstrip("\t"))
    for words, tag, dm in lexicon.iter_mwu():
        lines.append("\t".join([" ".join(words), tag, FLAG_DISCOURSE_MARKER if dm else ""]).rstrip("\t"))
    return "\n".join(lines) + ("\n" if lines else "")
