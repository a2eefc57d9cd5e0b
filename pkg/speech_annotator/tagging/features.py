"""
Feature templates for the linear-chain CRF

A unigram template reads attributes at relative offsets around a position
and yields one key ``id=value``; values of several extractors are joined
with ``|``. Positions outside the sequence read ``BOS`` / ``EOS``. The
bigram template carries no extractors: it stands for the label transition
weights.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from speech_annotator.config import WINDOW_RADIUS

BOS = "BOS"
EOS = "EOS"
MISSING = "-"

ATTRIBUTES = frozenset({
    "word", "lower", "shape",
    "prefix1", "prefix2", "prefix3", "prefix4",
    "suffix1", "suffix2", "suffix3", "suffix4",
    "pause_before", "pause_after", "candidates", "false_start", "mwu",
})

Position = Mapping[str, str]


class Arity(str, Enum):
    UNIGRAM = "unigram"
    BIGRAM = "bigram"


@dataclass(frozen=True)
class FeatureTemplate:
    id: str
    extractors: Tuple[Tuple[int, str], ...] = ()
    arity: Arity = Arity.UNIGRAM
    radius: int = field(default=WINDOW_RADIUS, compare=False)

    def __post_init__(self):
        if not self.id or any(ch in self.id for ch in "=\t\n "):
            raise ValueError(f"invalid template id {self.id!r}")
        if self.arity is Arity.BIGRAM and self.extractors:
            raise ValueError(f"bigram template {self.id} takes no extractors")
        for offset, attribute in self.extractors:
            if abs(offset) > self.radius:
                raise ValueError(f"template {self.id}: offset {offset} outside window radius {self.radius}")
            if attribute not in ATTRIBUTES:
                raise ValueError(f"template {self.id}: unknown attribute {attribute!r}")

    def key(self, positions: Sequence[Position], i: int) -> str:
        values = []
        for offset, attribute in self.extractors:
            j = i + offset
            if j < 0:
                values.append(BOS)
            elif j >= len(positions):
                values.append(EOS)
            else:
                values.append(positions[j].get(attribute, MISSING))
        return f"{self.id}={'|'.join(values)}"

    def serialize(self) -> str:
        extractors = ",".join(f"{offset}:{attribute}" for offset, attribute in self.extractors)
        return f"{self.id}\t{self.arity.value}\t{extractors}"

    @classmethod
    def deserialize(cls, line: str) -> 'FeatureTemplate':
        template_id, arity, extractors = line.split("\t")
        pairs = []
        for item in filter(None, extractors.split(",")):
            offset, attribute = item.split(":", 1)
            pairs.append((int(offset), attribute))
        return cls(template_id, tuple(pairs), Arity(arity))


TRANSITION = FeatureTemplate("T", arity=Arity.BIGRAM)


def _unigram(template_id: str, *extractors: Tuple[int, str]) -> FeatureTemplate:
    return FeatureTemplate(template_id, tuple(extractors))


DEFAULT_TEMPLATES: Tuple[FeatureTemplate, ...] = (
    _unigram("bias"),
    _unigram("w-2", (-2, "lower")),
    _unigram("w-1", (-1, "lower")),
    _unigram("w0", (0, "lower")),
    _unigram("w1", (1, "lower")),
    _unigram("w2", (2, "lower")),
    _unigram("W0", (0, "word")),
    _unigram("p1", (0, "prefix1")),
    _unigram("p2", (0, "prefix2")),
    _unigram("p3", (0, "prefix3")),
    _unigram("p4", (0, "prefix4")),
    _unigram("s1", (0, "suffix1")),
    _unigram("s2", (0, "suffix2")),
    _unigram("s3", (0, "suffix3")),
    _unigram("s4", (0, "suffix4")),
    _unigram("shape", (0, "shape")),
    _unigram("lex-1", (-1, "candidates")),
    _unigram("lex0", (0, "candidates")),
    _unigram("lex1", (1, "candidates")),
    _unigram("pb", (0, "pause_before")),
    _unigram("pa", (0, "pause_after")),
    _unigram("fs", (0, "false_start")),
    _unigram("w-1w0", (-1, "lower"), (0, "lower")),
    TRANSITION,
)

# final model: default inventory plus the multi-word candidate of each position
FINAL_TEMPLATES: Tuple[FeatureTemplate, ...] = DEFAULT_TEMPLATES[:-1] + (
    _unigram("mwu0", (0, "mwu")),
    _unigram("mwu0w0", (0, "mwu"), (0, "lower")),
    TRANSITION,
)


@dataclass
class LabeledSequence:
    positions: List[Dict[str, str]]
    labels: Optional[List[str]] = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.positions):
            raise ValueError(f"{len(self.labels)} labels for {len(self.positions)} positions")

    def __len__(self):
        return len(self.positions)


def word_shape(word: str) -> str:
    """Collapsed character classes: ``Paris`` -> ``Xx``, ``c'`` -> ``x'``, ``1984`` -> ``d``"""
    shape = []
    for ch in word:
        if ch.isupper():
            cls = "X"
        elif ch.isalpha():
            cls = "x"
        elif ch.isdigit():
            cls = "d"
        else:
            cls = ch
        if not shape or shape[-1] != cls:
            shape.append(cls)
    return "".join(shape) or MISSING


def position_attributes(word: str, candidates: str = MISSING, pause_before: str = MISSING,
                        pause_after: str = MISSING, false_start: bool = False,
                        mwu: str = MISSING) -> Dict[str, str]:
    lower = word.casefold()
    attributes = {
        "word": word,
        "lower": lower,
        "shape": word_shape(word),
        "candidates": candidates,
        "pause_before": pause_before,
        "pause_after": pause_after,
        "false_start": "1" if false_start else "0",
        "mwu": mwu,
    }
    for n in range(1, 5):
        attributes[f"prefix{n}"] = lower[:n]
        attributes[f"suffix{n}"] = lower[-n:]
    return attributes


def extract_features(seq: LabeledSequence, templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES) -> List[List[str]]:
    """Active observation feature keys per position, in template order"""
    unigrams = [template for template in templates if template.arity is Arity.UNIGRAM]
    return [[template.key(seq.positions, i) for template in unigrams] for i in range(len(seq.positions))]
