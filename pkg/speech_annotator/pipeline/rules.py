"""
Rule-based refinement of the proposed tags

One rule per line::

    [tier=matcher][tier=matcher] => index:tier=value

Text matchers are exact strings; tag matchers may also be shell-style globs
(``DET:*``). Condition tiers are ``text``, ``pos-min``, ``disfluency`` and
``pos-mwu``; the action sets ``pos-min`` or ``pos-mwu`` at a window position.
Blank lines and lines starting with ``#`` are skipped.
"""
import logging
import re
from dataclasses import dataclass
from fnmatch import fnmatchcase
from pathlib import Path
from typing import AbstractSet, Iterable, List, Optional, Sequence, Tuple, Union

from speech_annotator.annotation.document import Document, TierValue
from speech_annotator.annotation.tagset import TagRegistry, parse_tag_value
from speech_annotator.config import DISFLUENCY, POS_MIN, POS_MWU, TOK_MWU
from speech_annotator.errors import RuleParseError, TagError

logger = logging.getLogger(__name__)

TEXT = "text"
CONDITION_TIERS = frozenset({TEXT, POS_MIN, DISFLUENCY, POS_MWU})
ACTION_TIERS = frozenset({POS_MIN, POS_MWU})
MAX_WINDOW = 5

_CONDITION = re.compile(r"\[([^=\]]+)=([^\]]*)\]")
_ACTION = re.compile(r"^(\d+):([^=]+)=(.+)$")


@dataclass(frozen=True)
class PostRule:
    pattern: Tuple[Tuple[str, str], ...]
    target: int
    tier: str
    value: str
    line: int = 0

    @property
    def window(self) -> int:
        return len(self.pattern)

    def __str__(self):
        conditions = "".join(f"[{tier}={matcher}]" for tier, matcher in self.pattern)
        return f"{conditions} => {self.target}:{self.tier}={self.value}"


def parse_post_rule(line: str, number: int = 0, source: str = "<rules>",
                    registry: Optional[TagRegistry] = None) -> PostRule:
    def fail(message: str) -> RuleParseError:
        return RuleParseError(message, line=number, source=source)

    if "=>" not in line:
        raise fail("missing '=>'")
    left, right = (part.strip() for part in line.split("=>", 1))
    pattern = tuple((tier.strip(), matcher.strip()) for tier, matcher in _CONDITION.findall(left))
    if not pattern or _CONDITION.sub("", left).strip():
        raise fail(f"malformed condition list {left!r}")
    if len(pattern) > MAX_WINDOW:
        raise fail(f"window of {len(pattern)} tokens, at most {MAX_WINDOW} allowed")
    for tier, _ in pattern:
        if tier not in CONDITION_TIERS:
            raise fail(f"unknown condition tier {tier!r}")

    action = _ACTION.match(right)
    if action is None:
        raise fail(f"malformed action {right!r}")
    target, tier, value = int(action.group(1)), action.group(2).strip(), action.group(3).strip()
    if tier not in ACTION_TIERS:
        raise fail(f"action tier must be pos-min or pos-mwu, not {tier!r}")
    if target >= len(pattern):
        raise fail(f"action index {target} outside a window of {len(pattern)}")
    try:
        parse_tag_value(value, registry)
    except TagError as e:
        raise fail(f"invalid tag {value!r}: {e}") from None
    return PostRule(pattern, target, tier, value, number)


def parse_post_rules(lines: Iterable[str], source: str = "<rules>",
                     registry: Optional[TagRegistry] = None) -> List[PostRule]:
    rules = []
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rules.append(parse_post_rule(line, number, source, registry))
    return rules


def load_post_rules(path: Union[str, Path], registry: Optional[TagRegistry] = None) -> List[PostRule]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise RuleParseError("rule file is not UTF-8", source=str(path)) from None
    rules = parse_post_rules(text.splitlines(), str(path), registry)
    logger.info(f"Loaded {len(rules)} post-rules from {path}")
    return rules


def _tier_value(doc: Document, tier: str, i: int, unit_of: Sequence[int]) -> str:
    if tier == TEXT:
        return doc.tokens[i].text
    if tier == POS_MWU:
        return doc.tiers[POS_MWU][unit_of[i]].value
    return doc.tiers[tier][i].value


def _matches(tier: str, value: str, matcher: str) -> bool:
    if tier == TEXT:
        return value == matcher
    return fnmatchcase(value, matcher)


def _unit_index(doc: Document) -> List[int]:
    unit_of = [0] * len(doc.tokens)
    for k, unit in enumerate(doc.tiers[TOK_MWU]):
        for i in range(unit.start, unit.end):
            unit_of[i] = k
    return unit_of


def _apply(doc: Document, rule: PostRule, i: int, unit_of: Sequence[int]) -> None:
    unit = doc.tiers[TOK_MWU][unit_of[i]]
    if rule.tier == POS_MIN:
        doc.set_value(POS_MIN, i, rule.value)
        if len(unit) == 1:
            doc.tiers[POS_MWU][unit_of[i]] = TierValue(unit.start, unit.end, rule.value)
    else:
        doc.tiers[POS_MWU][unit_of[i]] = TierValue(unit.start, unit.end, rule.value)
        if len(unit) == 1:
            doc.set_value(POS_MIN, i, rule.value)


def apply_post_rules(doc: Document, rules: Sequence[PostRule], locked: AbstractSet[int] = frozenset()) -> Document:
    """
    Apply the rules in order, each in one left-to-right pass over the
    non-pause tokens with non-overlapping window matches. Tokens in `locked`
    are never retagged.
    """
    if not rules or not doc.tokens:
        return doc
    view = [i for i, token in enumerate(doc.tokens) if not token.is_pause]
    unit_of = _unit_index(doc)
    for rule in rules:
        applied = 0
        p = 0
        while p + rule.window <= len(view):
            window = view[p:p + rule.window]
            if all(_matches(tier, _tier_value(doc, tier, i, unit_of), matcher)
                   for (tier, matcher), i in zip(rule.pattern, window)):
                target = window[rule.target]
                if target not in locked:
                    _apply(doc, rule, target, unit_of)
                    applied += 1
                p += rule.window
            else:
                p += 1
        if applied:
            logger.debug(f"rule {rule} applied {applied} times")
    return doc
