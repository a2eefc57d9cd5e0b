import os
from typing import List, Sequence, Tuple, Union

import pytest
from unittest.mock import patch

from speech_annotator.annotation.document import DocumentMetadata, Token, new_document
from speech_annotator.annotation.tagset import DATA_DIR
from speech_annotator.config import PipelineConfig, TrainingConfig
from speech_annotator.evaluation.synthetic import generate_corpus
from speech_annotator.pipeline.training import train_resources

WORD_SECONDS = 0.2


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains and cross-validates on a larger synthetic corpus")


@pytest.fixture(scope="function", autouse=True)
def mock_environment():
    """Resolve default resources from the shipped data directory in every test"""
    with patch.dict(os.environ, {
        "SPEECH_ANNOTATOR_HOME": str(DATA_DIR),
    }):
        yield


def build_tokens(items: Sequence[Union[str, Tuple[str, float]]], speaker: str = "") -> List[Token]:
    """
    Tokens laid end to end. Plain strings last 0.2 s; ``("_", 600)`` is a
    pause of 600 ms and ``("word", 0.9)`` a word lasting 0.9 s.
    """
    tokens = []
    t = 0.0
    for item in items:
        text, length = (item, None) if isinstance(item, str) else item
        if text == "_":
            duration = (length or 600) / 1000.0
        else:
            duration = length or WORD_SECONDS
        end = round(t + duration, 6)
        tokens.append(Token(text, t, end, speaker=speaker, is_pause=text == "_"))
        t = end
    return tokens


@pytest.fixture
def make_tokens():
    return build_tokens


@pytest.fixture
def make_document():
    def make(items, sample_id="sample", subcorpus_id="", timed=True):
        return new_document(build_tokens(items), DocumentMetadata(sample_id, subcorpus_id), timed)
    return make


@pytest.fixture(scope="session")
def synthetic_corpus():
    return generate_corpus(1200, seed=11, document_tokens=200)


@pytest.fixture(scope="session")
def quick_config():
    return PipelineConfig(training=TrainingConfig(max_iterations=40))


@pytest.fixture(scope="session")
def trained_resources(synthetic_corpus, quick_config):
    return train_resources(synthetic_corpus.documents, synthetic_corpus.lexicon, quick_config)
