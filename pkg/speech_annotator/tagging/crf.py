"""
Linear-chain CRF inference

Scores are linear: each active observation feature adds a per-label weight
and each consecutive label pair adds a transition weight. Observation
weights exist only for (feature, label) pairs seen in training; every
transition is a parameter. All inference runs in log space.
"""
import logging
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from speech_annotator.config import L2_SIGMA, MODEL_FORMAT_VERSION
from speech_annotator.errors import NonFinite, UnknownLabel

from .features import DEFAULT_TEMPLATES, FeatureTemplate, LabeledSequence, extract_features

logger = logging.getLogger(__name__)

Allowed = Optional[Sequence[Optional[Collection[str]]]]


@dataclass(eq=False)
class CrfModel:
    labels: Tuple[str, ...]
    templates: Tuple[FeatureTemplate, ...]
    features: Tuple[str, ...]
    obs_weights: np.ndarray
    obs_mask: np.ndarray
    trans_weights: np.ndarray
    format_version: int = MODEL_FORMAT_VERSION
    feature_index: Dict[str, int] = field(init=False, repr=False, compare=False)
    label_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n_features, n_labels = len(self.features), len(self.labels)
        self.obs_weights = np.asarray(self.obs_weights, dtype=float).reshape(n_features, n_labels)
        self.obs_mask = np.asarray(self.obs_mask, dtype=bool).reshape(n_features, n_labels)
        self.trans_weights = np.asarray(self.trans_weights, dtype=float).reshape(n_labels, n_labels)
        if len(set(self.labels)) != n_labels:
            raise ValueError("duplicate labels")
        self.obs_weights = np.where(self.obs_mask, self.obs_weights, 0.0)
        self.feature_index = {feature: k for k, feature in enumerate(self.features)}
        self.label_index = {label: k for k, label in enumerate(self.labels)}

    @classmethod
    def initial(cls, data: Sequence[LabeledSequence],
                templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES,
                labels: Optional[Sequence[str]] = None) -> 'CrfModel':
        """Zero-weight model whose parameters are the (feature, label) pairs seen in `data`"""
        seen_labels = sorted({label for seq in data for label in (seq.labels or ())})
        labels = tuple(labels) if labels is not None else tuple(seen_labels)
        label_index = {label: k for k, label in enumerate(labels)}
        pairs = set()
        for seq in data:
            if seq.labels is None:
                raise ValueError("training sequences need gold labels")
            for keys, label in zip(extract_features(seq, templates), seq.labels):
                if label not in label_index:
                    raise UnknownLabel(f"label {label!r} not in the model label set")
                pairs.update((key, label_index[label]) for key in keys)
        features = tuple(sorted({key for key, _ in pairs}))
        feature_index = {key: k for k, key in enumerate(features)}
        mask = np.zeros((len(features), len(labels)), dtype=bool)
        for key, y in pairs:
            mask[feature_index[key], y] = True
        return cls(labels, tuple(templates), features,
                   np.zeros(mask.shape), mask, np.zeros((len(labels), len(labels))))

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_parameters(self) -> int:
        return int(self.obs_mask.sum()) + self.n_labels * self.n_labels

    def parameters(self) -> np.ndarray:
        return np.concatenate([self.obs_weights[self.obs_mask], self.trans_weights.ravel()])

    def with_parameters(self, theta: np.ndarray) -> 'CrfModel':
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} parameters, got {theta.shape}")
        k = int(self.obs_mask.sum())
        weights = np.zeros_like(self.obs_weights)
        weights[self.obs_mask] = theta[:k]
        return CrfModel(self.labels, self.templates, self.features, weights, self.obs_mask.copy(),
                        theta[k:].reshape(self.n_labels, self.n_labels).copy(), self.format_version)


@dataclass
class EncodedBatch:
    """Sequences of a batch stacked row-wise, padded views built on demand"""
    matrix: sparse.csr_matrix
    lengths: np.ndarray
    gold: Optional[np.ndarray] = None
    allowed: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return len(self.lengths)

    @property
    def n_positions(self) -> int:
        return int(self.lengths.sum())

    def padded_index(self) -> Tuple[np.ndarray, np.ndarray]:
        """(B, Tmax) row indices into the stacked matrix, and the validity mask"""
        t_max = int(self.lengths.max()) if self.size else 0
        starts = np.concatenate([[0], np.cumsum(self.lengths)[:-1]]).astype(int) if self.size else np.zeros(0, int)
        steps = np.arange(t_max)
        valid = steps[None, :] < self.lengths[:, None]
        rows = np.where(valid, starts[:, None] + steps[None, :], 0)
        return rows, valid


def _allowed_row(model: CrfModel, labels: Optional[Collection[str]]) -> np.ndarray:
    row = np.ones(model.n_labels, dtype=bool)
    if labels:
        known = [model.label_index[label] for label in labels if label in model.label_index]
        # unknown-only constraints cannot be honoured by this model
        if known:
            row[:] = False
            row[known] = True
    return row


def encode(model: CrfModel, sequences: Sequence[LabeledSequence], with_gold: bool = False,
           allowed: Optional[Sequence[Allowed]] = None) -> EncodedBatch:
    rows, cols = [], []
    lengths = []
    gold = []
    allowed_rows = []
    position = 0
    for s, seq in enumerate(sequences):
        keys = extract_features(seq, model.templates)
        for i, active in enumerate(keys):
            for key in active:
                k = model.feature_index.get(key)
                if k is not None:
                    rows.append(position + i)
                    cols.append(k)
        if with_gold:
            if seq.labels is None:
                raise ValueError("gold labels required")
            for label in seq.labels:
                if label not in model.label_index:
                    raise UnknownLabel(f"label {label!r} not in the model label set")
                gold.append(model.label_index[label])
        if allowed is not None:
            constraints = allowed[s] or [None] * len(seq)
            allowed_rows.extend(_allowed_row(model, constraints[i]) for i in range(len(seq)))
        lengths.append(len(seq))
        position += len(seq)
    matrix = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(position, len(model.features)))
    return EncodedBatch(
        matrix=matrix,
        lengths=np.asarray(lengths, dtype=int),
        gold=np.asarray(gold, dtype=int) if with_gold else None,
        allowed=np.vstack(allowed_rows) if allowed_rows else None,
    )


def emissions(model: CrfModel, batch: EncodedBatch) -> np.ndarray:
    scores = np.asarray(batch.matrix @ model.obs_weights).reshape(batch.n_positions, model.n_labels)
    if batch.allowed is not None:
        scores = np.where(batch.allowed, scores, -np.inf)
    return scores


def forward_backward(emission: np.ndarray, transitions: np.ndarray, batch: EncodedBatch):
    """
    Batched log-space forward-backward over padded sequences.
    Returns log partition per sequence, node marginals (stacked rows) and
    expected transition counts summed over the batch.
    """
    n_labels = transitions.shape[0]
    if batch.size == 0 or batch.n_positions == 0:
        return np.zeros(batch.size), np.zeros((0, n_labels)), np.zeros((n_labels, n_labels))
    rows, valid = batch.padded_index()
    size, t_max = rows.shape
    padded = np.where(valid[:, :, None], emission[rows], 0.0)

    alpha = np.empty((size, t_max, n_labels))
    alpha[:, 0] = padded[:, 0]
    for t in range(1, t_max):
        step = logsumexp(alpha[:, t - 1, :, None] + transitions[None], axis=1) + padded[:, t]
        alpha[:, t] = np.where(valid[:, t, None], step, alpha[:, t - 1])
    beta = np.zeros((size, t_max, n_labels))
    for t in range(t_max - 2, -1, -1):
        step = logsumexp(transitions[None] + (padded[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        beta[:, t] = np.where(valid[:, t + 1, None], step, 0.0)

    log_z = logsumexp(alpha[:, t_max - 1], axis=1)
    empty = batch.lengths == 0
    log_z = np.where(empty, 0.0, log_z)
    with np.errstate(invalid="ignore"):
        node = np.exp(alpha + beta - log_z[:, None, None])
    node = node[valid]

    expected = np.zeros((n_labels, n_labels))
    for t in range(1, t_max):
        live = valid[:, t]
        if not live.any():
            continue
        joint = (alpha[live, t - 1, :, None] + transitions[None]
                 + (padded[live, t] + beta[live, t])[:, None, :] - log_z[live, None, None])
        expected += np.exp(joint).sum(axis=0)
    return log_z, node, expected


def _non_start_rows(lengths: np.ndarray) -> np.ndarray:
    """Rows of the stacked batch that have a predecessor in the same sequence"""
    total = int(lengths.sum())
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(int)
    has_previous = np.ones(total, dtype=bool)
    has_previous[starts[lengths > 0]] = False
    return np.flatnonzero(has_previous)


def objective_and_gradient(model: CrfModel, batch: Union[EncodedBatch, Sequence[LabeledSequence]],
                           l2_sigma: float = L2_SIGMA) -> Tuple[float, np.ndarray]:
    """Negative log-likelihood plus ||theta||^2 / (2 sigma^2), and its gradient"""
    if not isinstance(batch, EncodedBatch):
        batch = encode(model, batch, with_gold=True)
    theta = model.parameters()
    penalty = float(theta @ theta) / (2.0 * l2_sigma ** 2)
    gradient = theta / l2_sigma ** 2
    if batch.n_positions == 0:
        return penalty, gradient

    emission = emissions(model, batch)
    log_z, node, expected = forward_backward(emission, model.trans_weights, batch)
    gold = batch.gold
    later = _non_start_rows(batch.lengths)
    gold_score = emission[np.arange(len(gold)), gold].sum() + model.trans_weights[gold[later - 1], gold[later]].sum()
    nll = float(log_z.sum() - gold_score)

    observed = np.zeros_like(node)
    observed[np.arange(len(gold)), gold] = 1.0
    obs_gradient = np.asarray(batch.matrix.T @ (node - observed))
    empirical = np.zeros_like(model.trans_weights)
    np.add.at(empirical, (gold[later - 1], gold[later]), 1.0)
    gradient = gradient + np.concatenate([obs_gradient[model.obs_mask], (expected - empirical).ravel()])

    value = nll + penalty
    if not np.isfinite(value) or not np.all(np.isfinite(gradient)):
        raise NonFinite("objective or gradient is not finite")
    return value, gradient


def _single(model: CrfModel, seq: LabeledSequence, allowed: Allowed) -> np.ndarray:
    batch = encode(model, [seq], allowed=[allowed] if allowed is not None else None)
    return emissions(model, batch)


def decode(model: CrfModel, seq: LabeledSequence, allowed: Allowed = None) -> List[str]:
    """
    Viterbi labels. `allowed` optionally restricts each position to a label
    set (None = unrestricted). Ties go to the lowest label index.
    """
    n = len(seq)
    if n == 0:
        return []
    scores = _single(model, seq, allowed)
    transitions = model.trans_weights
    backpointers = np.zeros((n, model.n_labels), dtype=int)
    delta = scores[0]
    for t in range(1, n):
        candidates = delta[:, None] + transitions
        backpointers[t] = np.argmax(candidates, axis=0)
        delta = candidates[backpointers[t], np.arange(model.n_labels)] + scores[t]
    best = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        best.append(int(backpointers[t][best[-1]]))
    return [model.labels[k] for k in reversed(best)]


def marginals(model: CrfModel, seq: LabeledSequence, allowed: Allowed = None) -> np.ndarray:
    """(n, L) posterior label probabilities; rows sum to 1"""
    n = len(seq)
    if n == 0:
        return np.zeros((0, model.n_labels))
    batch = encode(model, [seq], allowed=[allowed] if allowed is not None else None)
    _, node, _ = forward_backward(emissions(model, batch), model.trans_weights, batch)
    return node


def sequence_score(model: CrfModel, seq: LabeledSequence, labels: Sequence[str]) -> float:
    """Unnormalised log score of a labelling"""
    scores = _single(model, seq, None)
    index = [model.label_index[label] for label in labels]
    total = sum(scores[t, y] for t, y in enumerate(index))
    total += sum(model.trans_weights[a, b] for a, b in zip(index, index[1:]))
    return float(total)
