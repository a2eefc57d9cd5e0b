"""
Tokenisation of transcription intervals into minimal tokens

Each interval's text is split on whitespace, then by the split-rule table
(clitics, elisions). Token times inside an interval are interpolated in
proportion to character counts; gaps between intervals, empty intervals and
written pause symbols become pause tokens.
"""
import configparser
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from speech_annotator.annotation.document import TIME_EPSILON, Token
from speech_annotator.config import PAUSE_LONG, PAUSE_SHORT, TokenizerConfig
from speech_annotator.errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

WILDCARD = "*"
CONFIG_SECTION = "tokenizer"

IntervalLike = Tuple[float, float, str]


@dataclass(frozen=True)
class SplitRule:
    """
    `pattern` is a literal word (``c'est``), a prefix glob (``c'*``) or a
    suffix glob (``*-il``). `parts` concatenate back to the pattern, the
    wildcard part standing for the remainder of the word.
    """
    pattern: str
    parts: Tuple[str, ...]

    def __post_init__(self):
        if not self.pattern or not self.parts:
            raise ConfigError("split rules need a pattern and at least one part")
        stars = self.pattern.count(WILDCARD)
        if stars > 1 or (stars == 1 and WILDCARD not in (self.pattern[0], self.pattern[-1])):
            raise ConfigError(f"wildcard must start or end the pattern: {self.pattern!r}")
        if stars and (len(self.parts) != 2 or WILDCARD not in self.parts or self.pattern == WILDCARD):
            raise ConfigError(f"glob rule {self.pattern!r} must split into the fixed part and '*'")
        if "".join(self.parts) != self.pattern:
            raise ConfigError(f"parts {self.parts} do not rebuild pattern {self.pattern!r}")

    @property
    def fixed(self) -> str:
        return self.pattern.replace(WILDCARD, "")

    @property
    def is_prefix(self) -> bool:
        return self.pattern.endswith(WILDCARD) and len(self.pattern) > 1

    @property
    def is_suffix(self) -> bool:
        return self.pattern.startswith(WILDCARD) and len(self.pattern) > 1

    def apply(self, word: str) -> Optional[List[str]]:
        """Pieces of `word` (original casing kept), or None when the rule does not match"""
        folded = word.casefold()
        fixed = self.fixed.casefold()
        if self.is_prefix:
            if folded.startswith(fixed) and len(word) > len(fixed):
                return [word[:len(fixed)], word[len(fixed):]]
            return None
        if self.is_suffix:
            if folded.endswith(fixed) and len(word) > len(fixed):
                return [word[:-len(fixed)], word[-len(fixed):]]
            return None
        if folded != fixed or len(folded) != len(word):
            return None
        pieces, cursor = [], 0
        for part in self.parts:
            pieces.append(word[cursor:cursor + len(part)])
            cursor += len(part)
        return pieces


def order_rules(rules: Iterable[SplitRule]) -> Tuple[SplitRule, ...]:
    """Longest fixed text first; literal words before globs of the same length"""
    return tuple(sorted(rules, key=lambda rule: (-len(rule.fixed), WILDCARD in rule.pattern)))


def load_split_rules(path: Union[str, Path]) -> Tuple[SplitRule, ...]:
    path = Path(path)
    rules = []
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            pattern, sep, parts = line.partition("\t")
            if not sep or not parts.split():
                raise ParseError("expected 'PATTERN<TAB>part1 part2 ...'", line=number, source=str(path))
            try:
                rules.append(SplitRule(pattern.strip(), tuple(parts.split())))
            except ConfigError as e:
                raise ParseError(str(e), line=number, source=str(path)) from None
    logger.debug(f"Loaded {len(rules)} split rules from {path}")
    return order_rules(rules)


def load_tokenizer_config(path: Union[str, Path]) -> TokenizerConfig:
    """
    Read a ``key = value`` tokenizer config. A ``rules`` key names the split
    rule table, relative to the config file.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string(f"[{CONFIG_SECTION}]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    values = dict(parser[CONFIG_SECTION])
    rules: Tuple[SplitRule, ...] = ()
    if values.get("rules"):
        rules = load_split_rules(path.parent / values["rules"].strip())
    return TokenizerConfig.from_mapping(values, split_rules=rules)


def split_word(word: str, rules: Sequence[SplitRule]) -> List[str]:
    for rule in rules:
        pieces = rule.apply(word)
        if pieces is None:
            continue
        if rule.is_prefix:
            return [pieces[0]] + split_word(pieces[1], rules)
        if rule.is_suffix:
            return split_word(pieces[0], rules) + [pieces[1]]
        return pieces
    return [word]


@dataclass(frozen=True)
class _Piece:
    text: str
    is_pause: bool = False
    false_start: bool = False
    intra_word_pause: bool = False
    attached: bool = False
    surface: Optional[str] = None

    @property
    def weight(self) -> int:
        return max(len(self.surface or self.text), 1)


def _word_pieces(word: str, cfg: TokenizerConfig) -> List[_Piece]:
    if word == cfg.pause_symbol:
        return [_Piece(cfg.pause_symbol, is_pause=True)]
    text = word
    false_start = intra = False
    if text.endswith(cfg.false_start_marker) and len(text) > len(cfg.false_start_marker):
        text = text[:-len(cfg.false_start_marker)]
        false_start = True
    if cfg.intra_word_pause_marker in text:
        stripped = text.replace(cfg.intra_word_pause_marker, "")
        if stripped:
            text, intra = stripped, True
    if false_start or intra:
        # marked words are fragments, never split
        return [_Piece(text, false_start=false_start, intra_word_pause=intra, surface=word)]
    parts = split_word(word, cfg.split_rules)
    return [_Piece(part, attached=k > 0) for k, part in enumerate(parts)]


def _append(tokens: List[Token], token: Token) -> None:
    previous = tokens[-1] if tokens else None
    if (token.is_pause and previous is not None and previous.is_pause
            and abs(previous.t_max - token.t_min) <= TIME_EPSILON):
        tokens[-1] = replace(previous, t_max=token.t_max)
        return
    tokens.append(token)


def tokenize(intervals: Iterable[IntervalLike], cfg: Optional[TokenizerConfig] = None,
             speaker: str = "") -> List[Token]:
    """Minimal tokens of ordered, non-overlapping (tMin, tMax, text) intervals"""
    cfg = cfg or TokenizerConfig()
    tokens: List[Token] = []
    previous_end: Optional[float] = None
    for t_min, t_max, text in intervals:
        if previous_end is not None and t_min > previous_end + TIME_EPSILON:
            _append(tokens, Token(cfg.pause_symbol, previous_end, t_min, speaker=speaker, is_pause=True))
        previous_end = t_max

        pieces = [
            piece
            for word in text.split() if word not in cfg.ignore_strings
            for piece in _word_pieces(word, cfg)
        ]
        if not pieces:
            _append(tokens, Token(cfg.pause_symbol, t_min, t_max, speaker=speaker, is_pause=True))
            continue

        total = sum(piece.weight for piece in pieces)
        cursor = 0
        start = t_min
        for k, piece in enumerate(pieces):
            cursor += piece.weight
            end = t_max if k == len(pieces) - 1 else t_min + (t_max - t_min) * cursor / total
            _append(tokens, Token(
                piece.text, start, end, speaker=speaker, is_pause=piece.is_pause,
                false_start=piece.false_start, intra_word_pause=piece.intra_word_pause,
                attached=piece.attached, surface=piece.surface,
            ))
            start = end
    return tokens


def classify_pauses(tokens: Sequence[Token], cfg: Optional[TokenizerConfig] = None) -> List[Token]:
    """Label every pause token short or long"""
    cfg = cfg or TokenizerConfig()
    durations = np.array([token.duration_ms for token in tokens if token.is_pause], dtype=float)
    cutoff = float(cfg.short_pause_max_ms)
    if cfg.pause_mode == "distribution":
        if len(durations) >= 2:
            q1, median, q3 = np.percentile(durations, [25, 50, 75])
            cutoff = float(median + 1.5 * (q3 - q1))
        else:
            logger.info(f"Fewer than two pauses, falling back to the {cfg.short_pause_max_ms} ms threshold")
    return [
        replace(token, pause_class=PAUSE_LONG if token.duration_ms > cutoff else PAUSE_SHORT)
        if token.is_pause else token
        for token in tokens
    ]


def detokenize(tokens: Iterable[Token], keep_pauses: bool = False) -> str:
    """Transcription text of the tokens, stripped markers restored"""
    words: List[str] = []
    for token in tokens:
        if token.is_pause and not keep_pauses:
            continue
        text = token.surface if token.surface is not None else token.text
        if token.attached and words:
            words[-1] += text
        else:
            words.append(text)
    return " ".join(words)
