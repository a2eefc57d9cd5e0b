"""
Synthetic gold corpora

Utterances come from a small template grammar of French clauses whose
ambiguous words (le, est, a, bon, que) are resolved by their neighbours.
Filled pauses, exact repetitions and false starts are injected at a given
rate and annotated the way the cascade annotates them; utterances are
separated by long pauses, so every utterance is one PSU.
"""
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from speech_annotator.annotation.document import (
    Document, DocumentMetadata, TierValue, Token, group_mwu, new_document,
)
from speech_annotator.annotation.tagset import DisfluencyCode
from speech_annotator.config import DISCOURSE, DISCOURSE_LABEL, DISFLUENCY, POS_MIN, POS_MWU, SILENCE_LABEL
from speech_annotator.preprocessing.lexicon import Lexicon

Word = Tuple[str, str]

SUBJECTS = ("je", "tu", "il", "elle", "on")
THIRD_PERSON = ("il", "elle", "on")
VERBS = ("mange", "regarde", "aime", "prend", "cherche")
TRANSITIVE_PARTICIPLES = ("mangé", "pris", "vu", "cherché")
MOTION_PARTICIPLES = ("parti", "venu", "arrivé", "sorti")
DETERMINERS = (("le", "DET:def"), ("la", "DET:def"), ("un", "DET:ind"), ("une", "DET:ind"))
NOUNS = ("chat", "chien", "pain", "maison", "voiture", "livre", "film", "gâteau", "jardin")
ADJECTIVES = ("grand", "petit", "content", "beau", "bon")
FILLED_PAUSES = ("euh", "heu")

LEXICON_ENTRIES = (
    [(s, ("PRO:per:stj",), False, False) for s in SUBJECTS]
    + [(v, ("VER:pres",), False, False) for v in VERBS]
    + [(p, ("VER:ppas",), False, False) for p in TRANSITIVE_PARTICIPLES + MOTION_PARTICIPLES]
    + [(n, ("NOM:com",), False, False) for n in NOUNS]
    + [(a, ("ADJ",), False, False) for a in ADJECTIVES if a != "bon"]
    + [
        ("le", ("DET:def", "PRO:per:objd"), False, False),
        ("la", ("DET:def", "PRO:per:objd"), False, False),
        ("un", ("DET:ind", "NUM:crd:det"), False, False),
        ("une", ("DET:ind", "NUM:crd:det"), False, False),
        ("est", ("VER:pres", "VER:pres:aux"), False, False),
        ("a", ("VER:pres", "VER:pres:aux"), False, False),
        ("bon", ("ADJ", "ITJ"), False, True),
        ("que", ("CON:sub", "PRO:rel"), False, False),
        ("mais", ("CON:coo",), False, True),
        ("en", ("PRP", "PRO:per:obji"), False, False),
        ("fait", ("VER:pres", "VER:ppas", "NOM:com"), False, False),
        ("euh", ("ITJ",), True, False),
        ("heu", ("ITJ",), True, False),
    ]
)
MWU_ENTRIES = ((("parce", "que"), "CON:sub", False), (("en", "fait"), "ADV", True))


def synthetic_lexicon() -> Lexicon:
    lexicon = Lexicon()
    for form, tags, filled_pause, discourse_marker in LEXICON_ENTRIES:
        lexicon.add(form, tags, filled_pause=filled_pause, discourse_marker=discourse_marker)
    for words, tag, discourse_marker in MWU_ENTRIES:
        lexicon.add_mwu(words, tag, discourse_marker)
    return lexicon


@dataclass
class _Entry:
    text: str
    pos: str
    disfluency: str = ""
    pause_ms: float = 0.0
    false_start: bool = False
    stretch: float = 1.0


@dataclass
class _Chunk:
    """Words injected around as a whole; MWUs and openers are single chunks"""
    words: List[Word]
    mwu: Optional[str] = None
    discourse: bool = False


@dataclass
class SyntheticCorpus:
    documents: List[Document]
    lexicon: Lexicon = field(default_factory=synthetic_lexicon)

    @property
    def n_tokens(self) -> int:
        return sum(len(doc.tokens) for doc in self.documents)


def _clause(rng: random.Random) -> List[Word]:
    det, det_tag = rng.choice(DETERMINERS)
    noun = (rng.choice(NOUNS), "NOM:com")
    kind = rng.randrange(7)
    if kind == 0:
        return [(rng.choice(SUBJECTS), "PRO:per:stj"), (rng.choice(VERBS), "VER:pres"), (det, det_tag), noun]
    subject = (rng.choice(THIRD_PERSON), "PRO:per:stj")
    if kind == 1:
        return [subject, ("est", "VER:pres"), (rng.choice(ADJECTIVES), "ADJ")]
    if kind == 2:
        return [subject, ("est", "VER:pres:aux"), (rng.choice(MOTION_PARTICIPLES), "VER:ppas")]
    if kind == 3:
        return [subject, ("a", "VER:pres:aux"), (rng.choice(TRANSITIVE_PARTICIPLES), "VER:ppas"), (det, det_tag), noun]
    if kind == 4:
        return [subject, ("a", "VER:pres"), (det, det_tag), noun]
    if kind == 5:
        pronoun = rng.choice(("le", "la"))
        return [(rng.choice(SUBJECTS), "PRO:per:stj"), (pronoun, "PRO:per:objd"), (rng.choice(VERBS), "VER:pres")]
    return [(det, det_tag), noun, ("est", "VER:pres"), (rng.choice(ADJECTIVES), "ADJ")]


def _utterance(rng: random.Random) -> List[_Chunk]:
    chunks: List[_Chunk] = []
    opener = rng.random()
    if opener < 0.15:
        chunks.append(_Chunk([("bon", "ITJ")], discourse=True))
    elif opener < 0.25:
        chunks.append(_Chunk([("en", "ADV"), ("fait", "ADV")], mwu="ADV", discourse=True))
    chunks.extend(_Chunk([word]) for word in _clause(rng))
    joiner = rng.random()
    if joiner < 0.2:
        chunks.append(_Chunk([("parce", "CON:sub"), ("que", "CON:sub")], mwu="CON:sub"))
        chunks.extend(_Chunk([word]) for word in _clause(rng))
    elif joiner < 0.3:
        chunks.append(_Chunk([("mais", "CON:coo")]))
        chunks.extend(_Chunk([word]) for word in _clause(rng))
    return chunks


def _repetition(chunks: Sequence[_Chunk], at: int, rng: random.Random) -> Optional[List[_Entry]]:
    """Reparandum and interregnum for an exact repetition of the plain words starting at `at`"""
    length = 2 if rng.random() < 0.3 else 1
    span = chunks[at:at + length]
    if len(span) < length or any(chunk.mwu or chunk.discourse for chunk in span):
        return None
    words = [chunk.words[0] for chunk in span]
    entries = [_Entry(text, pos, DisfluencyCode.REP.value) for text, pos in words]
    entries[-1].disfluency = "REP*"
    if rng.random() < 0.25:
        entries.append(_Entry(rng.choice(FILLED_PAUSES), "ITJ", DisfluencyCode.FIL.value))
    return entries


def _render(chunks: Sequence[_Chunk], rng: random.Random, rate: float,
            lengthening_rate: float) -> Tuple[List[_Entry], List[Tuple[int, int, str]], List[Tuple[int, int]]]:
    entries: List[_Entry] = []
    mwus: List[Tuple[int, int, str]] = []
    discourse: List[Tuple[int, int]] = []
    repair_left = 0
    k = 0
    while k < len(chunks):
        chunk = chunks[k]
        if repair_left == 0 and rng.random() < rate:
            event = rng.random()
            if event < 0.45:
                entries.append(_Entry(rng.choice(FILLED_PAUSES), "ITJ", DisfluencyCode.FIL.value))
            elif event < 0.85:
                reparandum = _repetition(chunks, k, rng)
                if reparandum is not None:
                    entries.extend(reparandum)
                    repair_left = sum(1 for entry in reparandum if entry.disfluency != DisfluencyCode.FIL.value)
            else:
                text, _ = chunk.words[0]
                if not chunk.mwu and len(text) >= 4:
                    entries.append(_Entry(text[:rng.choice((2, 3))], "FRG", DisfluencyCode.FST.value,
                                          false_start=True))
        pause_after = k + 1 < len(chunks) and rng.random() < 0.08
        start = len(entries)
        for text, pos in chunk.words:
            entry = _Entry(text, pos)
            if repair_left:
                entry.disfluency = "REP_"
                repair_left -= 1
            elif lengthening_rate and k + 1 < len(chunks) and not pause_after and rng.random() < lengthening_rate:
                entry.disfluency, entry.stretch = DisfluencyCode.LEN.value, 5.0
            entries.append(entry)
        if pause_after:
            entries[-1].pause_ms = 150.0
        if chunk.mwu:
            mwus.append((start, len(entries), chunk.mwu))
        if chunk.discourse:
            discourse.append((start, len(entries)))
        k += 1
    return entries, mwus, discourse


def _document(rng: random.Random, n_tokens: int, rate: float, lengthening_rate: float,
              metadata: DocumentMetadata, speaker: str) -> Document:
    tokens: List[Token] = []
    pos: List[str] = []
    disfluency: List[str] = []
    mwus: List[Tuple[int, int, str]] = []
    discourse: List[Tuple[int, int]] = []
    t = 0.0

    def pause(duration_ms: float) -> None:
        nonlocal t
        end = round(t + duration_ms / 1000.0, 4)
        tokens.append(Token(metadata.pause_symbol, t, end, speaker, is_pause=True))
        pos.append("")
        disfluency.append(SILENCE_LABEL)
        t = end

    while len(tokens) < n_tokens:
        if tokens:
            pause(rng.uniform(650.0, 900.0))
        entries, utterance_mwus, utterance_discourse = _render(_utterance(rng), rng, rate, lengthening_rate)
        offsets = []
        for entry in entries:
            offsets.append(len(tokens))
            seconds_per_char = 0.06 * (1.0 + rng.uniform(-0.1, 0.1)) * entry.stretch
            end = round(t + len(entry.text) * seconds_per_char, 4)
            surface = entry.text + "/" if entry.false_start else None
            tokens.append(Token(entry.text, t, end, speaker, false_start=entry.false_start, surface=surface))
            pos.append(entry.pos)
            disfluency.append(entry.disfluency)
            t = end
            if entry.pause_ms:
                pause(entry.pause_ms)
        # pause tokens shift later offsets, so map entry positions to token indices
        mwus.extend((offsets[a], offsets[b - 1] + 1, tag) for a, b, tag in utterance_mwus)
        discourse.extend((offsets[a], offsets[b - 1] + 1) for a, b in utterance_discourse)

    doc = new_document(tokens, metadata)
    for i, (p, d) in enumerate(zip(pos, disfluency)):
        doc.set_value(POS_MIN, i, p)
        doc.set_value(DISFLUENCY, i, d)
        doc.tiers[POS_MWU][i] = TierValue(i, i + 1, p)
    for start, end, tag in sorted(mwus, reverse=True):
        group_mwu(doc, (start, end), tag, in_place=True)
    doc.tiers[DISCOURSE] = [TierValue(start, end, DISCOURSE_LABEL) for start, end in discourse]
    return doc


def generate_corpus(n_tokens: int, seed: int = 7, disfluency_rate: float = 0.1,
                    subcorpora: Sequence[str] = ("conversation", "interview"),
                    document_tokens: int = 250, lengthening_rate: float = 0.0,
                    speaker: str = "spk1") -> SyntheticCorpus:
    """
    About `n_tokens` tokens in documents of about `document_tokens` tokens,
    dealt to the sub-corpora in turn. Deterministic for a given seed.
    """
    if n_tokens <= 0:
        raise ValueError("n_tokens must be positive")
    if not 0.0 <= disfluency_rate < 1.0:
        raise ValueError("disfluency_rate must be in [0, 1)")
    rng = random.Random(seed)
    documents: List[Document] = []
    produced = 0
    while produced < n_tokens:
        subcorpus = subcorpora[len(documents) % len(subcorpora)]
        metadata = DocumentMetadata(sample_id=f"{subcorpus}-{len(documents) + 1:03d}", subcorpus_id=subcorpus)
        doc = _document(rng, min(document_tokens, n_tokens - produced), disfluency_rate, lengthening_rate,
                        metadata, speaker)
        documents.append(doc)
        produced += len(doc.tokens)
    return SyntheticCorpus(documents)
