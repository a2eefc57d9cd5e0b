import pytest

from speech_annotator.annotation.document import group_mwu
from speech_annotator.annotation.tagset import DATA_DIR
from speech_annotator.config import POS_MIN, POS_MWU
from speech_annotator.errors import RuleParseError
from speech_annotator.pipeline.rules import apply_post_rules, load_post_rules, parse_post_rule, parse_post_rules


def tagged(make_document, words, tags):
    doc = make_document(words)
    for i, tag in enumerate(tags):
        doc.set_value(POS_MIN, i, tag)
        doc.set_value(POS_MWU, i, tag)
    return doc


def test_parse_rule():
    rule = parse_post_rule("[pos-min=DET:*][text=est] => 1:pos-min=VER:pres", number=4)
    assert rule.pattern == (("pos-min", "DET:*"), ("text", "est"))
    assert (rule.target, rule.tier, rule.value, rule.line) == (1, "pos-min", "VER:pres", 4)
    assert rule.window == 2
    assert str(rule) == "[pos-min=DET:*][text=est] => 1:pos-min=VER:pres"


@pytest.mark.parametrize("line", [
    "[text=le] 0:pos-min=DET:def",
    "[colour=red] => 0:pos-min=ADJ",
    "[text=le] => 1:pos-min=DET:def",
    "[text=le] => 0:pos-min=NOPE",
    "[text=le] => 0:text=la",
    "[text=a][text=b][text=c][text=d][text=e][text=f] => 0:pos-min=ADV",
    "[text=le] junk => 0:pos-min=DET:def",
    "[text=le] => first:pos-min=DET:def",
])
def test_malformed_rules(line):
    with pytest.raises(RuleParseError):
        parse_post_rule(line)


def test_rule_files_skip_comments_and_report_lines(tmp_path):
    rules = parse_post_rules(["# header", "", "[text=a] => 0:pos-min=PRP"])
    assert [rule.line for rule in rules] == [3]
    path = tmp_path / "rules.txt"
    path.write_text("[text=a] => 0:pos-min=PRP\n[text=b] =>\n", encoding="utf-8")
    with pytest.raises(RuleParseError) as error:
        load_post_rules(path)
    assert error.value.line == 2
    assert len(load_post_rules(DATA_DIR / "post_rules.txt")) == 3


def test_rule_retags_matching_windows(make_document):
    doc = tagged(make_document, ["le", "est", "grand"], ["DET:def", "VER:pres:aux", "ADJ"])
    apply_post_rules(doc, [parse_post_rule("[pos-min=DET:*][text=est] => 1:pos-min=VER:pres")])
    assert doc.values(POS_MIN) == ["DET:def", "VER:pres", "ADJ"]
    # singleton units follow their token
    assert doc.values(POS_MWU)[1] == "VER:pres"


def test_locked_tokens_are_not_retagged(make_document):
    doc = tagged(make_document, ["le", "est"], ["DET:def", "VER:pres:aux"])
    apply_post_rules(doc, [parse_post_rule("[pos-min=DET:*][text=est] => 1:pos-min=VER:pres")], locked={1})
    assert doc.values(POS_MIN)[1] == "VER:pres:aux"


def test_windows_do_not_overlap_and_skip_pauses(make_document):
    doc = tagged(make_document, ["a", "a", ("_", 300), "a"], ["X", "X", "", "X"])
    apply_post_rules(doc, [parse_post_rule("[text=a][text=a] => 1:pos-min=ADV")])
    assert doc.values(POS_MIN) == ["X", "ADV", "", "X"]

    doc = tagged(make_document, ["il", ("_", 200), "y", "a"], ["PRO:per:stj", "", "PRO:per:obji", "VER:pres:aux"])
    apply_post_rules(doc, load_post_rules(DATA_DIR / "post_rules.txt"))
    assert doc.values(POS_MIN)[3] == "VER:pres"


def test_rules_apply_in_order(make_document):
    rules = parse_post_rules([
        "[text=a][pos-min=X] => 1:pos-min=ADV",
        "[text=a][pos-min=ADV] => 1:pos-min=ADJ",
    ])
    doc = tagged(make_document, ["a", "b"], ["X", "X"])
    apply_post_rules(doc, rules)
    assert doc.values(POS_MIN) == ["X", "ADJ"]

    doc = tagged(make_document, ["a", "b"], ["X", "X"])
    apply_post_rules(doc, list(reversed(rules)))
    assert doc.values(POS_MIN) == ["X", "ADV"]


def test_unit_tag_action(make_document):
    doc = tagged(make_document, ["bien", "que", "il"], ["ADV", "CON:sub", "PRO:per:stj"])
    group_mwu(doc, (0, 2), "CON:sub", in_place=True)
    apply_post_rules(doc, [parse_post_rule("[pos-mwu=CON:sub][text=que] => 0:pos-mwu=CON:coo")])
    assert doc.tiers[POS_MWU][0].value == "CON:coo"
    # multi-word units do not write through to their tokens
    assert doc.values(POS_MIN)[:2] == ["ADV", "CON:sub"]


@pytest.mark.parametrize("symbol", ["?", "*"])
def test_text_matchers_are_literal(make_document, symbol):
    doc = tagged(make_document, [symbol, "a", symbol], ["X", "X", "X"])
    apply_post_rules(doc, [parse_post_rule(f"[text={symbol}] => 0:pos-min=ITJ")])
    assert doc.values(POS_MIN) == ["ITJ", "X", "ITJ"]
    # tag matchers keep their glob meaning
    apply_post_rules(doc, [parse_post_rule("[pos-min=I*] => 0:pos-min=ADV")])
    assert doc.values(POS_MIN) == ["ADV", "X", "ADV"]
