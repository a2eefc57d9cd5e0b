"""
CRF training: L2-regularised conditional log-likelihood minimised with L-BFGS-B
"""
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from speech_annotator.config import TrainingConfig
from speech_annotator.errors import NoData
from speech_annotator.observability import MODELS_TRAINED, OPTIMIZER_ITERATIONS, tracer

from .crf import CrfModel, encode, objective_and_gradient
from .features import DEFAULT_TEMPLATES, FeatureTemplate, LabeledSequence

logger = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    model: CrfModel
    # objective at the start, then after every accepted iteration
    objective_history: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    message: str = ""


def fit(data: Sequence[LabeledSequence], cfg: Optional[TrainingConfig] = None,
        templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES,
        labels: Optional[Sequence[str]] = None) -> TrainingResult:
    cfg = cfg or TrainingConfig()
    data = [seq for seq in data if len(seq)]
    if not data:
        raise NoData("no labelled positions to train on")
    data = list(data)
    random.Random(cfg.seed).shuffle(data)

    with tracer.start_as_current_span("crf.fit") as span:
        model = CrfModel.initial(data, templates, labels)
        batch = encode(model, data, with_gold=True)
        span.set_attribute("crf.labels", model.n_labels)
        span.set_attribute("crf.parameters", model.n_parameters)
        logger.info(f"Training CRF: {len(data)} sequences, {batch.n_positions} positions, "
                    f"{model.n_labels} labels, {model.n_parameters} parameters")

        work = model.with_parameters(model.parameters())
        n_observation = int(model.obs_mask.sum())
        # objective values of the latest evaluations, keyed by parameter bytes
        evaluated: Dict[bytes, float] = {}

        def objective(theta: np.ndarray):
            work.obs_weights[work.obs_mask] = theta[:n_observation]
            work.trans_weights[:, :] = theta[n_observation:].reshape(model.n_labels, model.n_labels)
            value, gradient = objective_and_gradient(work, batch, cfg.l2_sigma)
            if len(evaluated) >= 8:
                evaluated.pop(next(iter(evaluated)))
            evaluated[theta.tobytes()] = value
            return value, gradient

        theta0 = model.parameters()
        history = [objective(theta0)[0]]

        def accepted(theta: np.ndarray):
            value = evaluated.get(theta.tobytes())
            if value is None:
                value = objective(theta)[0]
            history.append(value)
            OPTIMIZER_ITERATIONS.inc()
            logger.debug(f"iteration {len(history) - 1}: objective {value:.6f}")

        result = minimize(objective, theta0, jac=True, method="L-BFGS-B", callback=accepted,
                          options={"maxiter": cfg.max_iterations, "ftol": cfg.convergence_tol})
        trained = model.with_parameters(result.x)
        converged = bool(result.success)
        MODELS_TRAINED.labels(converged=str(converged).lower()).inc()
        span.set_attribute("crf.iterations", int(result.nit))
        message = result.message.decode() if isinstance(result.message, bytes) else str(result.message)
        logger.info(f"CRF training stopped after {result.nit} iterations: {message} (objective {result.fun:.6f})")
    return TrainingResult(trained, history, int(result.nit), converged, message)


def train(data: Sequence[LabeledSequence], cfg: Optional[TrainingConfig] = None,
          templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES,
          labels: Optional[Sequence[str]] = None) -> CrfModel:
    return fit(data, cfg, templates, labels).model
