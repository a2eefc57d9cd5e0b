from dataclasses import replace

import pytest
from prometheus_client import REGISTRY

from speech_annotator.annotation.document import TierValue, validate
from speech_annotator.config import DISCOURSE, DISFLUENCY, POS_MIN, POS_MWU, SILENCE_LABEL, TOK_MWU
from speech_annotator.errors import ConfigError, LabelOutsideRegistry, NoData
from speech_annotator.evaluation.metrics import score_pos
from speech_annotator.evaluation.synthetic import generate_corpus
from speech_annotator.pipeline import annotate, load_resources, run_cascade, save_resources, train_resources
from speech_annotator.preprocessing.lexicon import dump_lexicon
from speech_annotator.tagging.crf import CrfModel
from speech_annotator.tagging.features import LabeledSequence, position_attributes


@pytest.fixture(scope="module")
def held_out():
    return generate_corpus(400, seed=99, document_tokens=200).documents


def test_trained_resources(trained_resources):
    assert set(trained_resources.models()) == {"prelim.crf", "final.crf", "discourse.crf"}
    # the synthetic corpus has no DEL/SUB/INS
    assert trained_resources.disfluency_model is None
    assert trained_resources.training_results["final.crf"].iterations >= 1


def test_annotation_keeps_tokens_and_invariants(trained_resources, quick_config, held_out):
    for gold in held_out:
        pred = annotate(gold, trained_resources, quick_config)
        assert [(t.text, t.t_min, t.t_max) for t in pred.tokens] == [(t.text, t.t_min, t.t_max) for t in gold.tokens]
        assert validate(pred) == []
        for token, pos, disfluency in zip(pred.tokens, pred.values(POS_MIN), pred.values(DISFLUENCY)):
            if token.is_pause:
                assert (pos, disfluency) == ("", SILENCE_LABEL)
            else:
                assert pos


def test_annotation_quality_on_held_out_text(trained_resources, quick_config, held_out):
    scores = sum((score_pos(gold, annotate(gold, trained_resources, quick_config)) for gold in held_out[1:]),
                 score_pos(held_out[0], annotate(held_out[0], trained_resources, quick_config)))
    assert scores.precision_l1 > 0.9
    assert scores.precision_full > 0.85


def test_annotation_does_not_touch_its_input(trained_resources, quick_config, held_out):
    gold = held_out[0]
    before = {name: list(values) for name, values in gold.tiers.items()}
    annotate(gold, trained_resources, quick_config)
    assert gold.tiers == before


def test_filled_pauses_and_repetitions(trained_resources, quick_config, make_document):
    doc = make_document(["il", "mange", "euh", "le", "le", "pain"])
    state = run_cascade(doc, trained_resources, quick_config)
    pred = state.document
    assert pred.values(DISFLUENCY) == ["", "", "FIL", "REP*", "REP_", ""]
    assert pred.values(POS_MIN)[2] == "ITJ"
    assert len(state.structures) == 1
    assert state.structures[0].reparandum == (3, 4)


def test_multi_word_units_are_grouped(trained_resources, quick_config, make_document):
    doc = make_document(["il", "mange", "le", "pain", "parce", "que", "il", "est", "content"])
    pred = annotate(doc, trained_resources, quick_config)
    assert TierValue(4, 6, "parce que") in pred.tiers[TOK_MWU]
    assert TierValue(4, 6, "CON:sub") in pred.tiers[POS_MWU]
    assert len(pred.tiers[TOK_MWU]) == 8


def test_disfluent_tokens_break_multi_word_units(trained_resources, quick_config, make_document):
    doc = make_document(["il", "mange", "parce", "euh", "que", "il", "est", "content"])
    pred = annotate(doc, trained_resources, quick_config)
    assert all(len(unit) == 1 for unit in pred.tiers[TOK_MWU])


def test_discourse_markers_need_a_model(trained_resources, quick_config, held_out):
    without = replace(trained_resources, discourse_model=None)
    for gold in held_out:
        assert annotate(gold, without, quick_config).tiers[DISCOURSE] == []
    marked = [value for gold in held_out for value in annotate(gold, trained_resources, quick_config).tiers[DISCOURSE]]
    assert marked
    assert all(value.value == "DM" for value in marked)


def test_annotation_is_deterministic(trained_resources, quick_config, held_out):
    first = annotate(held_out[1], trained_resources, quick_config)
    second = annotate(held_out[1], trained_resources, quick_config)
    assert first.tiers == second.tiers


def test_saved_resources_annotate_identically(trained_resources, quick_config, held_out, tmp_path):
    save_resources(trained_resources, tmp_path / "models")
    lexicon_file = tmp_path / "lexicon.tsv"
    lexicon_file.write_text(dump_lexicon(trained_resources.lexicon), encoding="utf-8")
    rules_file = tmp_path / "rules.txt"
    rules_file.write_text("# none\n", encoding="utf-8")
    loaded = load_resources(tmp_path / "models", [lexicon_file], rules_file)
    assert sorted(loaded.models()) == sorted(trained_resources.models())
    gold = held_out[0]
    assert annotate(gold, loaded, quick_config).tiers == annotate(gold, trained_resources, quick_config).tiers


def test_missing_models(tmp_path):
    with pytest.raises(ConfigError, match="prelim.crf"):
        load_resources(tmp_path)


def test_model_labels_must_be_registry_tags(trained_resources, quick_config, make_document):
    bogus = CrfModel.initial([LabeledSequence([position_attributes("mot")], ["NOT:A:TAG"])])
    with pytest.raises(LabelOutsideRegistry):
        annotate(make_document(["mot"]), replace(trained_resources, final_model=bogus), quick_config)


def test_training_needs_valid_gold(synthetic_corpus, quick_config, make_document):
    with pytest.raises(NoData):
        train_resources([make_document([])], synthetic_corpus.lexicon, quick_config)
    doc = make_document(["il", "mange"])
    doc.set_value(POS_MIN, 0, "PRO:per:stj")
    doc.set_value(POS_MIN, 1, "VERB")
    with pytest.raises(LabelOutsideRegistry):
        train_resources([doc], synthetic_corpus.lexicon, quick_config)


def test_annotation_updates_metrics(trained_resources, quick_config, make_document):
    def sample(name, **labels):
        return REGISTRY.get_sample_value(name, labels) or 0.0

    documents = sample("speech_annotator_documents_total")
    words = sample("speech_annotator_tokens_total", kind="word")
    fillers = sample("speech_annotator_disfluencies_total", code="FIL")
    annotate(make_document(["il", "mange", ("_", 300), "euh"]), trained_resources, quick_config)
    assert sample("speech_annotator_documents_total") == documents + 1
    assert sample("speech_annotator_tokens_total", kind="word") == words + 3
    assert sample("speech_annotator_disfluencies_total", code="FIL") == fillers + 1
