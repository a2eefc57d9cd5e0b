"""
Exceptions raised by the speech annotator
"""
from typing import Optional


class AnnotatorError(Exception):
    """Base class for every data or resource error"""


class ConfigError(AnnotatorError):
    pass


# Tag-set

class TagError(AnnotatorError):
    pass


class MalformedTag(TagError):
    pass


class UnknownTag(TagError):
    pass


class UnknownCode(TagError):
    pass


class IllegalMarker(TagError):
    pass


# Documents

class DocumentError(AnnotatorError):
    pass


class OverlapError(DocumentError):
    pass


class MisalignedSpan(DocumentError):
    pass


# File formats

class FormatError(AnnotatorError):
    pass


class ParseError(FormatError):
    """Malformed input, located by source name and 1-based line number"""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        location = ""
        if self.source is not None:
            location += f"{self.source}:"
        if self.line is not None:
            location += f"{self.line}:"
        return f"{location} {self.message}".strip()


class EncodingError(FormatError):
    pass


class InvariantError(FormatError):
    pass


class MissingColumn(FormatError):
    pass


# Lexicon

class LexiconError(AnnotatorError):
    pass


class InvalidTag(LexiconError):
    pass


# Sequence tagger

class CrfError(AnnotatorError):
    pass


class NoData(CrfError):
    pass


class NonFinite(CrfError):
    pass


class UnknownLabel(CrfError):
    pass


class VersionMismatch(CrfError):
    pass


class CorruptModel(CrfError):
    pass


# Pipeline

class PipelineError(AnnotatorError):
    pass


class LabelOutsideRegistry(PipelineError):
    pass


class RuleParseError(PipelineError):

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        prefix = ":".join(str(part) for part in (source, line) if part is not None)
        super().__init__(f"{prefix}: {message}" if prefix else message)


# Evaluation

class EvaluationError(AnnotatorError):
    pass


class TooFewUnits(EvaluationError):
    pass


class IncongruentDocuments(EvaluationError):
    pass
