"""
Process-wide metrics and tracing

Metrics live in the default prometheus registry; spans are no-ops unless
the host application installs an OpenTelemetry SDK.
"""
import logging

from opentelemetry import trace
from prometheus_client import Counter, Histogram

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

tracer = trace.get_tracer("speech_annotator")

DOCUMENTS_ANNOTATED = Counter(
    "speech_annotator_documents_total", "Documents run through the annotation cascade")
TOKENS_ANNOTATED = Counter(
    "speech_annotator_tokens_total", "Minimal tokens annotated", ["kind"])
ANNOTATION_LATENCY = Histogram(
    "speech_annotator_annotation_seconds", "Per-document annotation latency",
    buckets=(0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0))
DISFLUENCIES_DETECTED = Counter(
    "speech_annotator_disfluencies_total", "Disfluency labels written", ["code"])
OPTIMIZER_ITERATIONS = Counter(
    "speech_annotator_optimizer_iterations_total", "L-BFGS iterations run while training CRF models")
MODELS_TRAINED = Counter(
    "speech_annotator_models_trained_total", "CRF models trained", ["converged"])


def configure_logging(level: int = logging.INFO) -> None:
    logging.basicConfig(level=level, format=LOG_FORMAT)
