import pytest

from speech_annotator.annotation.document import (
    DocumentMetadata,
    TierValue,
    Token,
    ViolationRule,
    group_mwu,
    new_document,
    psu_segments,
    slice_document,
    validate,
)
from speech_annotator.config import DISCOURSE, DISFLUENCY, POS_MIN, POS_MWU, TOK_MWU
from speech_annotator.errors import MisalignedSpan, OverlapError


def test_new_document_is_well_formed(make_document):
    doc = make_document(["il", "y", "a", "_", "du", "pain"])
    assert len(doc) == 6
    assert doc.values(POS_MIN) == [""] * 6
    assert doc.values(TOK_MWU) == ["il", "y", "a", "_", "du", "pain"]
    assert doc.tiers[DISCOURSE] == []
    assert validate(doc) == []


def test_overlapping_tokens_of_one_speaker_are_rejected():
    tokens = [Token("a", 0.0, 0.5), Token("b", 0.4, 0.8)]
    with pytest.raises(OverlapError):
        new_document(tokens)


def test_overlap_between_speakers_is_allowed():
    tokens = [Token("oui", 0.0, 0.5, speaker="A"), Token("non", 0.2, 0.6, speaker="B")]
    doc = new_document(tokens)
    assert doc.speakers == ["A", "B"]
    assert validate(doc) == []


def test_group_mwu_merges_units(make_document):
    doc = make_document(["parce", "que", "il", "pleut"])
    grouped = group_mwu(doc, (0, 2), "CON:sub")
    assert [unit.span for unit in grouped.tiers[TOK_MWU]] == [(0, 2), (2, 3), (3, 4)]
    assert grouped.tiers[TOK_MWU][0].value == "parce que"
    assert grouped.tiers[POS_MWU][0].value == "CON:sub"
    assert validate(grouped) == []
    # the original is untouched unless in_place is set
    assert len(doc.tiers[TOK_MWU]) == 4


def test_group_mwu_requires_unit_boundaries(make_document):
    doc = make_document(["il", "y", "a", "du", "pain"])
    group_mwu(doc, (0, 3), "VER:pres", in_place=True)
    with pytest.raises(MisalignedSpan):
        group_mwu(doc, (1, 4), "ADV")
    with pytest.raises(MisalignedSpan):
        group_mwu(doc, (3, 9), "ADV")


def test_validate_reports_broken_tiers(make_document):
    doc = make_document(["a", "b", "c"])
    doc.tiers[TOK_MWU] = [TierValue(0, 2, "a b")]
    doc.tiers[POS_MIN] = doc.tiers[POS_MIN][:2]
    doc.tiers[DISCOURSE] = [TierValue(1, 3, "DM"), TierValue(2, 3, "DM")]
    rules = {(violation.tier, violation.rule) for violation in validate(doc)}
    assert (TOK_MWU, ViolationRule.PARTITION) in rules
    assert (POS_MIN, ViolationRule.CONGRUENCE) in rules
    assert (POS_MWU, ViolationRule.CONGRUENCE) in rules
    assert (DISCOURSE, ViolationRule.SPAN) in rules


def test_validate_reports_missing_tier_and_pause_symbol(make_document):
    doc = make_document(["a", "b"])
    del doc.tiers[DISFLUENCY]
    doc.tokens[1] = Token("#", 0.2, 0.4, is_pause=True)
    rules = {violation.rule for violation in validate(doc)}
    assert ViolationRule.MISSING_TIER in rules
    assert ViolationRule.PAUSE_SYMBOL in rules


def test_psu_segments_split_at_long_pauses(make_document):
    doc = make_document(["bon", ("_", 200), "alors", ("_", 700), "voilà", "quoi", ("_", 500)])
    assert psu_segments(doc, 500) == [(0, 2), (4, 5)]
    assert psu_segments(doc, 150) == [(0,), (2,), (4, 5)]
    with pytest.raises(ValueError):
        psu_segments(doc, 0)


def test_slice_document_clips_and_reindexes(make_document):
    doc = make_document(["bon", "en", "fait", "il", "pleut"], sample_id="s1")
    group_mwu(doc, (1, 3), "ADV", in_place=True)
    doc.tiers[DISCOURSE] = [TierValue(0, 3, "DM")]
    doc.set_value(POS_MIN, 4, "VER:pres")

    part = slice_document(doc, 2, 5)
    assert part.metadata.sample_id == "s1#2-5"
    assert [token.text for token in part.tokens] == ["fait", "il", "pleut"]
    assert part.tiers[TOK_MWU][0] == TierValue(0, 1, "fait")
    assert part.tiers[POS_MWU][0].value == "ADV"
    assert part.tiers[DISCOURSE] == [TierValue(0, 1, "DM")]
    assert part.values(POS_MIN)[2] == "VER:pres"
    assert validate(part) == []
    with pytest.raises(MisalignedSpan):
        slice_document(doc, 3, 9)


def test_token_durations():
    token = Token("mot", 1.25, 1.5)
    assert token.duration == pytest.approx(0.25)
    assert token.duration_ms == 250.0
    assert DocumentMetadata().pause_symbol == "_"
