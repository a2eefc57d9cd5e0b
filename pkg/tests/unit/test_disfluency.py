from dataclasses import replace

import numpy as np
import pytest

from speech_annotator.annotation.document import DocumentMetadata, new_document
from speech_annotator.config import DISFLUENCY, POS_MIN, DisfluencyConfig, PipelineConfig
from speech_annotator.errors import ConfigError
from speech_annotator.pipeline.cascade import detect_boundaries, preprocess
from speech_annotator.pipeline.disfluency import detect_simple_disfluencies, detect_structured_disfluencies
from speech_annotator.pipeline.resources import default_lexicon_files
from speech_annotator.preprocessing.lexicon import load_lexicon
from speech_annotator.tagging.crf import CrfModel
from speech_annotator.tagging.features import TRANSITION, FeatureTemplate


@pytest.fixture(scope="module")
def lexicon():
    return load_lexicon(default_lexicon_files())


@pytest.fixture
def prepare(lexicon, make_tokens):
    def run(items, timed=True, flags=None):
        tokens = make_tokens(items)
        for index, flag in (flags or {}).items():
            tokens[index] = replace(tokens[index], **{flag: True})
        doc = new_document(tokens, DocumentMetadata("sample"), timed)
        state = preprocess(doc, lexicon, PipelineConfig.default())
        return detect_boundaries(state)
    return run


def structured(prepare, words, model=None, cfg=None):
    state = prepare(words)
    detect_structured_disfluencies(state, model, cfg)
    return state.document.values(DISFLUENCY)


def test_preprocessing_locks_pauses_filled_pauses_and_false_starts(prepare):
    state = prepare(["bon", "euh", ("_", 300), "pré", "prévu"], flags={3: "false_start"})
    assert state.document.values(DISFLUENCY) == ["", "FIL", "SIL", "FST", ""]
    assert state.document.values(POS_MIN)[1:3] == ["ITJ", ""]
    assert state.locked_pos[1] == "ITJ"
    assert 3 in state.locked_disfluency


def test_intra_word_pause(prepare):
    state = detect_simple_disfluencies(prepare(["bon", "jour"], flags={0: "intra_word_pause"}))
    assert state.document.values(DISFLUENCY) == ["WDP", ""]


def lengthening_items(stretched=0.9, pause_after=False):
    items = [(f"w{i:02d}", 0.18) for i in range(21)]
    items[10] = ("w10", stretched)
    if pause_after:
        items.insert(11, ("_", 300))
    return items


def test_lengthening_uses_speaker_duration_statistics(prepare):
    state = detect_simple_disfluencies(prepare(lengthening_items()))
    values = state.document.values(DISFLUENCY)
    assert values[10] == "LEN"
    assert values.count("LEN") == 1


def test_pre_pausal_lengthening_is_not_a_disfluency(prepare):
    state = detect_simple_disfluencies(prepare(lengthening_items(pause_after=True)))
    assert "LEN" not in state.document.values(DISFLUENCY)


def test_lengthening_needs_timing(prepare):
    state = detect_simple_disfluencies(prepare(lengthening_items(), timed=False))
    assert "LEN" not in state.document.values(DISFLUENCY)
    state = detect_simple_disfluencies(prepare(lengthening_items()),
                                       DisfluencyConfig(detect_lengthening=False))
    assert "LEN" not in state.document.values(DISFLUENCY)


def test_single_word_repetition(prepare):
    assert structured(prepare, ["je", "je", "veux"]) == ["REP*", "REP_", ""]
    assert structured(prepare, ["Le", "le", "chat"])[:2] == ["REP*", "REP_"]


def test_multi_word_repetition(prepare):
    assert structured(prepare, ["je", "veux", "je", "veux", "partir"]) == ["REP", "REP*", "REP_", "REP_", ""]


def test_filled_pause_interregnum_keeps_its_label(prepare):
    state = prepare(["le", "euh", "le", "chat"])
    detect_structured_disfluencies(state)
    assert state.document.values(DISFLUENCY) == ["REP*", "FIL", "REP_", ""]
    assert state.structures[0].interregnum == (1,)


def test_overlapping_repetitions_merge_into_complex(prepare):
    assert structured(prepare, ["le", "le", "le", "chat"]) == ["COM*", "COM*", "COM_", ""]


def test_repetitions_stay_inside_pause_separated_units(prepare):
    assert structured(prepare, ["le", ("_", 600), "le"]) == ["", "SIL", ""]
    assert structured(prepare, ["le", ("_", 200), "le"]) == ["REP*", "SIL", "REP_"]


def test_repetition_length_limit(prepare):
    words = ["a", "b", "c", "a", "b", "c"]
    assert structured(prepare, words, cfg=DisfluencyConfig(max_repetition=2)) == [""] * 6
    assert structured(prepare, words)[2:4] == ["REP*", "REP_"]
    with pytest.raises(ConfigError):
        DisfluencyConfig(max_repetition=9)


def word_model(labels, preferred):
    """Model scoring the lower-cased word alone; `preferred` maps a word to its label"""
    features = tuple(f"w0={word}" for word in sorted(preferred))
    weights = np.zeros((len(features), len(labels)))
    for k, word in enumerate(sorted(preferred)):
        weights[k, labels.index(preferred[word])] = 5.0
    return CrfModel(labels=tuple(labels), templates=(FeatureTemplate("w0", ((0, "lower"),)), TRANSITION),
                    features=features, obs_weights=weights, obs_mask=np.ones_like(weights, dtype=bool),
                    trans_weights=np.zeros((len(labels), len(labels))))


def test_model_adds_substitutions_around_rule_labels(prepare):
    model = word_model(["O", "SUB*"], {"je": "O", "suis": "O", "vais": "SUB*"})
    assert structured(prepare, ["je", "vais", "je", "suis"], model) == ["", "SUB*", "", ""]
    # repetitions found by rule are not overwritten
    assert structured(prepare, ["vais", "vais", "je"], model) == ["REP*", "REP_", ""]


def test_model_cannot_write_rule_only_codes(prepare):
    model = word_model(["O", "REP*"], {"je": "O", "vais": "REP*"})
    assert structured(prepare, ["je", "vais"], model) == ["", ""]
