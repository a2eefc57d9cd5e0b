import itertools
import time

import numpy as np
import pytest
from scipy.special import logsumexp

from speech_annotator.annotation.tagset import default_registry, format_pos_tag
from speech_annotator.errors import UnknownLabel
from speech_annotator.evaluation.synthetic import generate_corpus
from speech_annotator.tagging.crf import (
    CrfModel, decode, encode, forward_backward, emissions, marginals, objective_and_gradient, sequence_score,
)
from speech_annotator.tagging.features import (
    BOS, DEFAULT_TEMPLATES, EOS, TRANSITION, FeatureTemplate, LabeledSequence, extract_features,
    position_attributes, word_shape,
)

TEMPLATES = (
    FeatureTemplate("w0", ((0, "lower"),)),
    FeatureTemplate("w-1", ((-1, "lower"),)),
    FeatureTemplate("s2", ((0, "suffix2"),)),
    TRANSITION,
)


def sequence(words, labels=None):
    return LabeledSequence([position_attributes(word) for word in words], labels)


DATA = [
    sequence(["le", "chat", "dort"], ["D", "N", "V"]),
    sequence(["il", "le", "mange"], ["P", "P", "V"]),
    sequence(["la", "maison"], ["D", "N"]),
]


@pytest.fixture
def random_model():
    model = CrfModel.initial(DATA, TEMPLATES)
    rng = np.random.default_rng(3)
    return model.with_parameters(rng.normal(scale=0.8, size=model.n_parameters))


def brute_force(model, seq, allowed=None):
    labelings = []
    for labels in itertools.product(model.labels, repeat=len(seq)):
        if allowed and any(a is not None and y not in a for y, a in zip(labels, allowed)):
            continue
        labelings.append((labels, sequence_score(model, seq, labels)))
    return labelings


def test_feature_keys_use_sentinels():
    keys = extract_features(sequence(["Le", "chat"]), TEMPLATES)
    assert keys[0] == ["w0=le", f"w-1={BOS}", "s2=le"]
    assert keys[1][1] == "w-1=le"
    assert FeatureTemplate("w1", ((1, "lower"),)).key(sequence(["a"]).positions, 0) == f"w1={EOS}"
    assert word_shape("Paris") == "Xx"
    assert word_shape("1984") == "d"
    assert word_shape("c'") == "x'"


def test_template_validation():
    with pytest.raises(ValueError):
        FeatureTemplate("bad id")
    with pytest.raises(ValueError):
        FeatureTemplate("far", ((9, "lower"),))
    with pytest.raises(ValueError):
        FeatureTemplate("what", ((0, "colour"),))
    template = FeatureTemplate("pair", ((-1, "lower"), (0, "suffix3")))
    assert FeatureTemplate.deserialize(template.serialize()) == template


def test_initial_model_parameters():
    model = CrfModel.initial(DATA, TEMPLATES)
    assert model.labels == ("D", "N", "P", "V")
    assert model.n_parameters == int(model.obs_mask.sum()) + 16
    assert not model.parameters().any()
    with pytest.raises(UnknownLabel):
        CrfModel.initial(DATA, TEMPLATES, labels=["D", "N"])


def test_decode_matches_exhaustive_search(random_model):
    seq = sequence(["le", "chat", "mange", "la", "maison"])
    labels, _ = max(brute_force(random_model, seq), key=lambda item: item[1])
    assert decode(random_model, seq) == list(labels)


def test_marginals_match_exhaustive_enumeration(random_model):
    seq = sequence(["il", "le", "dort", "chat"])
    labelings = brute_force(random_model, seq)
    log_z = logsumexp([score for _, score in labelings])
    expected = np.zeros((len(seq), random_model.n_labels))
    for labels, score in labelings:
        for t, label in enumerate(labels):
            expected[t, random_model.label_index[label]] += np.exp(score - log_z)
    got = marginals(random_model, seq)
    np.testing.assert_allclose(got, expected, atol=1e-10)
    np.testing.assert_allclose(got.sum(axis=1), 1.0)

    batch = encode(random_model, [seq])
    computed_log_z, _, _ = forward_backward(emissions(random_model, batch), random_model.trans_weights, batch)
    assert computed_log_z[0] == pytest.approx(log_z)


def test_constrained_decoding_and_marginals(random_model):
    seq = sequence(["le", "chat", "dort"])
    allowed = [{"P"}, None, {"V", "N"}]
    labels, _ = max(brute_force(random_model, seq, allowed), key=lambda item: item[1])
    assert decode(random_model, seq, allowed) == list(labels)
    node = marginals(random_model, seq, allowed)
    assert node[0, random_model.label_index["P"]] == pytest.approx(1.0)
    assert node[2, random_model.label_index["D"]] == pytest.approx(0.0)
    # a constraint naming only unknown labels leaves the position free
    assert decode(random_model, seq, [{"ZZZ"}, None, None]) == decode(random_model, seq)


def test_empty_sequences(random_model):
    empty = sequence([])
    assert decode(random_model, empty) == []
    assert marginals(random_model, empty).shape == (0, random_model.n_labels)


def test_gradient_matches_finite_differences(random_model):
    value, gradient = objective_and_gradient(random_model, DATA, l2_sigma=2.0)
    theta = random_model.parameters()
    eps = 1e-6
    rng = np.random.default_rng(0)
    for k in rng.choice(len(theta), size=12, replace=False):
        step = np.zeros_like(theta)
        step[k] = eps
        up, _ = objective_and_gradient(random_model.with_parameters(theta + step), DATA, l2_sigma=2.0)
        down, _ = objective_and_gradient(random_model.with_parameters(theta - step), DATA, l2_sigma=2.0)
        assert gradient[k] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-6)


def test_objective_is_negative_log_likelihood_plus_penalty(random_model):
    sigma = 1.5
    value, _ = objective_and_gradient(random_model, DATA, l2_sigma=sigma)
    nll = 0.0
    for seq in DATA:
        log_z = logsumexp([score for _, score in brute_force(random_model, seq)])
        nll += log_z - sequence_score(random_model, seq, seq.labels)
    theta = random_model.parameters()
    assert value == pytest.approx(nll + theta @ theta / (2 * sigma ** 2))


def test_gold_labels_must_be_known(random_model):
    with pytest.raises(UnknownLabel):
        objective_and_gradient(random_model, [sequence(["le"], ["X"])])


def exhaustive(model, seq):
    """Scores of every labelling, with the labellings as rows of label indices"""
    n = len(seq)
    labelings = np.array(list(itertools.product(range(model.n_labels), repeat=n)))
    node = emissions(model, encode(model, [seq]))
    scores = node[np.arange(n), labelings].sum(axis=1)
    if n > 1:
        scores += model.trans_weights[labelings[:, :-1], labelings[:, 1:]].sum(axis=1)
    return labelings, scores


def random_instance(rng):
    vocabulary = ["le", "la", "chat", "dort", "il", "mange", "bon", "euh"]
    labels = [f"L{k}" for k in range(rng.integers(2, 6))]
    data = [sequence(list(rng.choice(vocabulary, size=4)), list(rng.choice(labels, size=4))) for _ in range(3)]
    model = CrfModel.initial(data, TEMPLATES, labels=labels)
    model = model.with_parameters(rng.normal(scale=1.5, size=model.n_parameters))
    return model, data, sequence(list(rng.choice(vocabulary, size=rng.integers(1, 7))))


@pytest.mark.slow
def test_random_instances_match_exhaustive_search():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        model, _, seq = random_instance(rng)
        labelings, scores = exhaustive(model, seq)
        best = labelings[int(np.argmax(scores))]
        assert decode(model, seq) == [model.labels[k] for k in best]
        weights = np.exp(scores - logsumexp(scores))
        expected = np.zeros((len(seq), model.n_labels))
        for t in range(len(seq)):
            np.add.at(expected[t], labelings[:, t], weights)
        np.testing.assert_allclose(marginals(model, seq), expected, atol=1e-9)


@pytest.mark.slow
def test_random_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(20):
        model, data, _ = random_instance(rng)
        _, gradient = objective_and_gradient(model, data, l2_sigma=1.0)
        theta = model.parameters()
        numeric = np.empty_like(theta)
        for k in range(len(theta)):
            step = np.zeros_like(theta)
            step[k] = h
            up, _ = objective_and_gradient(model.with_parameters(theta + step), data, l2_sigma=1.0)
            down, _ = objective_and_gradient(model.with_parameters(theta - step), data, l2_sigma=1.0)
            numeric[k] = (up - down) / (2 * h)
        scale = np.maximum(np.abs(numeric), 1e-2)
        assert np.max(np.abs(gradient - numeric) / scale) < 1e-4


@pytest.mark.slow
def test_decoding_throughput_with_the_full_tag_set():
    labels = [format_pos_tag(tag) for tag in default_registry()]
    rng = np.random.default_rng(11)
    training, unlabeled = [], []
    for doc in generate_corpus(5000, seed=2).documents:
        words = [token.text for token in doc.tokens if not token.is_pause]
        training.append(sequence(words, [str(label) for label in rng.choice(labels, size=len(words))]))
        unlabeled.append(sequence(words))
    model = CrfModel.initial(training, DEFAULT_TEMPLATES, labels)
    model = model.with_parameters(rng.normal(size=model.n_parameters))
    assert model.n_labels >= 60

    n_tokens = sum(len(seq) for seq in unlabeled)
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for seq in unlabeled:
            decode(model, seq)
        best = min(best, time.perf_counter() - start)
    assert n_tokens / best >= 5000
