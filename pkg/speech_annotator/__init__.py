"""
Six-tier annotation of speech transcriptions: tokens, POS tags, multi-word
units, discourse markers and disfluencies.
"""
from . import errors
from . import config
from . import annotation
from . import corpus_io
from . import preprocessing
from . import tagging
from . import pipeline
from . import evaluation

__version__ = "1.0.0"
