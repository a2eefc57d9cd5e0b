import pytest

from speech_annotator.annotation.document import validate
from speech_annotator.config import DISCOURSE, DISFLUENCY, POS_MIN, EvaluationConfig
from speech_annotator.errors import ConfigError, IncongruentDocuments, TooFewUnits
from speech_annotator.evaluation import (
    CrossValidationResult, FoldResult, Metrics, format_confusion, format_report, generate_corpus,
    score_disfluency, score_pos, split_folds,
)
from speech_annotator.evaluation.metrics import ratio


def test_split_is_balanced_and_deterministic(synthetic_corpus):
    plan = split_folds(synthetic_corpus.documents, k=5, seed=3)
    sizes = plan.sizes()
    assert max(sizes) - min(sizes) <= 1
    for stratum in ("conversation", "interview"):
        stratum_sizes = plan.sizes(stratum)
        assert max(stratum_sizes) - min(stratum_sizes) <= 1
    assert split_folds(synthetic_corpus.documents, k=5, seed=3).assignment == plan.assignment
    assert split_folds(synthetic_corpus.documents, k=5, seed=4).assignment != plan.assignment
    assert sorted(psu for k in range(5) for psu in plan.fold(k)) == sorted(plan.assignment)


def test_units_are_pause_separated_slices(synthetic_corpus):
    plan = split_folds(synthetic_corpus.documents, k=2)
    units = plan.units(synthetic_corpus.documents, plan.fold(0))
    assert units
    for unit in units:
        assert validate(unit) == []
        assert not unit.tokens[0].is_pause and not unit.tokens[-1].is_pause


def test_too_few_units(make_document):
    doc = make_document(["il", "mange", ("_", 800), "elle", "dort"], subcorpus_id="conversation")
    with pytest.raises(TooFewUnits):
        split_folds([doc], k=3)
    assert split_folds([doc], k=2).sizes() == [1, 1]
    with pytest.raises(TooFewUnits):
        split_folds([], k=2)


def tagged(make_document, words, pos, disfluency):
    doc = make_document(words)
    for i, (p, d) in enumerate(zip(pos, disfluency)):
        doc.set_value(POS_MIN, i, p)
        doc.set_value(DISFLUENCY, i, d)
    return doc


def test_pos_scores_at_every_level(make_document):
    words = ["le", "chat", ("_", 300), "dort", "bien"]
    gold = tagged(make_document, words, ["DET:def", "NOM:com", "", "VER:pres", "ADV"], [""] * 5)
    pred = tagged(make_document, words, ["DET:ind", "NOM:com", "", "VER:pres:aux", "ADJ"], [""] * 5)
    scores = score_pos(gold, pred)
    assert scores.total == 4
    assert (scores.correct_l1, scores.correct_l2, scores.correct_full) == (3, 2, 1)
    assert scores.precision_l2 == 0.5
    assert scores.confusion[("ADV", "ADJ")] == 1


def test_disfluency_scores(make_document):
    words = ["je", "je", "euh", ("_", 300), "veux", "par"]
    gold = tagged(make_document, words, [""] * 6, ["REP*", "REP_", "FIL", "SIL", "", "FST"])
    pred = tagged(make_document, words, [""] * 6, ["REP*", "", "FIL", "SIL", "LEN", "FIL"])
    scores = score_disfluency(gold, pred)
    assert (scores.gold_marked, scores.predicted_marked, scores.detected, scores.classified) == (4, 4, 3, 2)
    assert scores.detection_precision == 0.75
    assert scores.detection_recall == 0.75
    assert scores.code("FST").recall == 0.0
    assert scores.code("LEN").precision == 0.0
    assert scores.confusion[("FST", "FIL")] == 1


def test_empty_denominators_score_one(make_document):
    doc = tagged(make_document, ["oui"], ["ADV"], [""])
    scores = score_disfluency(doc, doc)
    assert scores.detection_precision == scores.detection_recall == 1.0
    assert ratio(0, 0) == 1.0


def test_scoring_needs_congruent_documents(make_document):
    with pytest.raises(IncongruentDocuments):
        score_pos(make_document(["a", "b"]), make_document(["a"]))
    with pytest.raises(IncongruentDocuments):
        score_pos(make_document(["a"]), make_document(["b"]))


def test_fold_means_are_unweighted():
    first = Metrics(1.0, 1.0, 0.8, 0.5, 0.5, 1.0, {"REP": (1.0, 0.5)})
    second = Metrics(0.5, 0.5, 0.4, 1.0, 1.0, 0.0, {"FIL": (1.0, 1.0)})
    mean = Metrics.mean([first, second])
    assert mean.pos_precision_full == pytest.approx(0.6)
    assert mean.disf_classification_precision == 0.5
    # codes average over the folds they occur in
    assert mean.per_code == {"FIL": (1.0, 1.0), "REP": (1.0, 0.5)}
    with pytest.raises(ValueError):
        Metrics.mean([])


def fake_result(make_document, synthetic_corpus):
    words = ["je", "je", "mange"]
    gold = tagged(make_document, words, ["PRO:per:stj", "PRO:per:stj", "VER:pres"], ["REP*", "REP_", ""])
    pred = tagged(make_document, words, ["PRO:per:stj", "PRO:per:objd", "VER:pres"], ["REP*", "REP_", ""])
    plan = split_folds(synthetic_corpus.documents, k=2)
    folds = [FoldResult(k, 1, 1, score_pos(gold, pred), score_disfluency(gold, pred)) for k in range(2)]
    return CrossValidationResult(plan, folds)


def test_report_has_exposition_and_table(make_document, synthetic_corpus):
    report = format_report(fake_result(make_document, synthetic_corpus))
    assert "# TYPE speech_annotator_eval_pos_precision_full gauge" in report
    assert 'speech_annotator_eval_pos_precision_l1{fold="mean"} 1.0' in report
    assert 'speech_annotator_eval_disfluency_code{code="REP",measure="recall"} 1.0' in report
    assert "speech_annotator_eval_folds 2.0" in report
    table = report.split("\n\n", 1)[1]
    assert table.splitlines()[0].split() == ["mean", "f1", "f2"]
    assert "Precision pos-min, full tag" in table
    assert "66.7" in table


def test_confusion_listing(make_document, synthetic_corpus):
    lines = format_confusion(fake_result(make_document, synthetic_corpus)).splitlines()
    assert lines == ["gold\tpredicted\tcount", "PRO:per:stj\tPRO:per:objd\t2"]


def test_synthetic_corpus_is_valid_gold(synthetic_corpus):
    assert 1200 <= synthetic_corpus.n_tokens < 1300
    names = [doc.metadata.sample_id for doc in synthetic_corpus.documents]
    assert names[:2] == ["conversation-001", "interview-002"]
    for doc in synthetic_corpus.documents:
        assert validate(doc) == []
        for token, pos in zip(doc.tokens, doc.values(POS_MIN)):
            assert bool(pos) != token.is_pause
    assert any(doc.tiers[DISCOURSE] for doc in synthetic_corpus.documents)
    codes = {value for doc in synthetic_corpus.documents for value in doc.values(DISFLUENCY)}
    assert {"FIL", "REP*", "REP_", "SIL"} <= codes


def test_synthetic_corpus_is_deterministic():
    first = generate_corpus(300, seed=5)
    second = generate_corpus(300, seed=5)
    assert [doc.tokens for doc in first.documents] == [doc.tokens for doc in second.documents]
    assert [doc.tiers for doc in first.documents] == [doc.tiers for doc in second.documents]
    with pytest.raises(ValueError):
        generate_corpus(0)


@pytest.mark.parametrize("kwargs", [{"k": 1}, {"jobs": 0}])
def test_evaluation_config_validation(kwargs):
    with pytest.raises(ConfigError):
        EvaluationConfig(**kwargs)
