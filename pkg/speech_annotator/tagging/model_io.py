"""
CRF model files

UTF-8 text: magic line, format version, label list, template list, then
one ``U<TAB>feature<TAB>label<TAB>weight`` line per observation parameter and
one ``B<TAB>previous<TAB>label<TAB>weight`` line per transition, closed by
``end``. Weights use the shortest repr that round-trips exactly.
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from speech_annotator.config import MODEL_FORMAT_VERSION, MODEL_MAGIC
from speech_annotator.errors import CorruptModel, VersionMismatch

from .crf import CrfModel
from .features import FeatureTemplate

logger = logging.getLogger(__name__)

_ESCAPES = (("\\", "\\\\"), ("\t", "\\t"), ("\n", "\\n"))


def _escape(text: str) -> str:
    for raw, escaped in _ESCAPES:
        text = text.replace(raw, escaped)
    return text


def _unescape(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(text[i + 1], text[i + 1]))
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def save_model(model: CrfModel) -> bytes:
    lines = [MODEL_MAGIC, f"version\t{model.format_version}", f"labels\t{len(model.labels)}"]
    lines.extend(_escape(label) for label in model.labels)
    lines.append(f"templates\t{len(model.templates)}")
    lines.extend(template.serialize() for template in model.templates)
    lines.append(f"parameters\t{int(model.obs_mask.sum())}\t{model.n_labels ** 2}")
    for f, y in zip(*np.nonzero(model.obs_mask)):
        lines.append(f"U\t{_escape(model.features[f])}\t{_escape(model.labels[y])}\t{float(model.obs_weights[f, y])!r}")
    for a in range(model.n_labels):
        for b in range(model.n_labels):
            lines.append(f"B\t{_escape(model.labels[a])}\t{_escape(model.labels[b])}\t{float(model.trans_weights[a, b])!r}")
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Lines:

    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.position = 0

    def next(self) -> str:
        if self.position >= len(self.lines):
            raise CorruptModel("unexpected end of model file")
        line = self.lines[self.position]
        self.position += 1
        return line

    def header(self, key: str) -> List[str]:
        fields = self.next().split("\t")
        if fields[0] != key or len(fields) < 2:
            raise CorruptModel(f"line {self.position}: expected '{key}' header")
        return fields[1:]


def load_model(data: bytes) -> CrfModel:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise CorruptModel("model file is not UTF-8") from None
    lines = _Lines(text)
    if lines.next() != MODEL_MAGIC:
        raise CorruptModel("not a CRF model file")
    try:
        version = int(lines.header("version")[0])
        if version != MODEL_FORMAT_VERSION:
            raise VersionMismatch(f"model format version {version}, expected {MODEL_FORMAT_VERSION}")
        labels = tuple(_unescape(lines.next()) for _ in range(int(lines.header("labels")[0])))
        templates = tuple(FeatureTemplate.deserialize(lines.next())
                          for _ in range(int(lines.header("templates")[0])))
        n_observation, n_transition = (int(value) for value in lines.header("parameters"))
        label_index = {label: k for k, label in enumerate(labels)}
        if n_transition != len(labels) ** 2:
            raise CorruptModel("transition count does not match the label set")

        feature_index: Dict[str, int] = {}
        entries: List[Tuple[int, int, float]] = []
        for _ in range(n_observation):
            kind, feature, label, weight = lines.next().split("\t")
            if kind != "U":
                raise CorruptModel(f"line {lines.position}: expected an observation weight")
            f = feature_index.setdefault(_unescape(feature), len(feature_index))
            entries.append((f, label_index[_unescape(label)], float(weight)))
        transitions = np.zeros((len(labels), len(labels)))
        for _ in range(n_transition):
            kind, previous, label, weight = lines.next().split("\t")
            if kind != "B":
                raise CorruptModel(f"line {lines.position}: expected a transition weight")
            transitions[label_index[_unescape(previous)], label_index[_unescape(label)]] = float(weight)
        if lines.next() != "end":
            raise CorruptModel("missing end marker")

        weights = np.zeros((len(feature_index), len(labels)))
        mask = np.zeros(weights.shape, dtype=bool)
        for f, y, weight in entries:
            weights[f, y] = weight
            mask[f, y] = True
        features = tuple(sorted(feature_index, key=feature_index.get))
        return CrfModel(labels, templates, features, weights, mask, transitions, version)
    except (ValueError, KeyError) as e:
        raise CorruptModel(f"line {lines.position}: {e}") from None


def write_model(model: CrfModel, path: Union[str, Path]) -> None:
    Path(path).write_bytes(save_model(model))
    logger.info(f"Wrote model with {model.n_labels} labels to {path}")


def read_model(path: Union[str, Path]) -> CrfModel:
    path = Path(path)
    try:
        return load_model(path.read_bytes())
    except CorruptModel as e:
        raise CorruptModel(f"{path}: {e}") from None
