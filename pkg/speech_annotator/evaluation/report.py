"""
Evaluation report: Prometheus text exposition followed by a readable table
"""
from typing import List

from prometheus_client import CollectorRegistry, Gauge, generate_latest

from .cross_validation import CrossValidationResult
from .metrics import Metrics

ROWS = (
    ("pos_precision_l1", "Precision pos-min, level 1"),
    ("pos_precision_l2", "Precision pos-min, level 2"),
    ("pos_precision_full", "Precision pos-min, full tag"),
    ("disf_detection_precision", "Disfluency detection precision"),
    ("disf_detection_recall", "Disfluency detection recall"),
    ("disf_classification_precision", "Disfluency classification precision"),
)


def metrics_registry(result: CrossValidationResult) -> CollectorRegistry:
    """Gauges labelled by fold (1-based, or ``mean``) in a registry of their own"""
    registry = CollectorRegistry(auto_describe=False)
    runs = [("mean", result.mean)] + [(str(fold.index + 1), fold.metrics) for fold in result.folds]
    for name, description in ROWS:
        gauge = Gauge(f"speech_annotator_eval_{name}", description, ["fold"], registry=registry)
        for fold, metrics in runs:
            gauge.labels(fold=fold).set(getattr(metrics, name))
    per_code = Gauge("speech_annotator_eval_disfluency_code", "Per-code disfluency precision and recall",
                     ["code", "measure"], registry=registry)
    for code, (precision, recall) in result.mean.per_code.items():
        per_code.labels(code=code, measure="precision").set(precision)
        per_code.labels(code=code, measure="recall").set(recall)
    folds = Gauge("speech_annotator_eval_folds", "Number of folds", registry=registry)
    folds.set(result.plan.k)
    return registry


def _percent(value: float) -> str:
    return f"{100.0 * value:.1f}"


def format_table(result: CrossValidationResult) -> str:
    mean: Metrics = result.mean
    fold_metrics = [fold.metrics for fold in result.folds]
    width = max(len(title) for _, title in ROWS)
    header = "".ljust(width) + "   mean" + "".join(f"  {f'f{k + 1}':>5}" for k in range(len(fold_metrics)))
    lines: List[str] = [header]
    for name, title in ROWS:
        cells = "".join(f"  {_percent(getattr(m, name)):>5}" for m in fold_metrics)
        lines.append(f"{title.ljust(width)}  {_percent(getattr(mean, name)):>5}{cells}")
    if mean.per_code:
        lines.append("")
        lines.append("Per-code disfluency precision / recall")
        for code, (precision, recall) in mean.per_code.items():
            lines.append(f"  {code:<5} {_percent(precision):>5} / {_percent(recall):>5}")
    return "\n".join(lines) + "\n"


def format_confusion(result: CrossValidationResult, limit: int = 20) -> str:
    """Most frequent full-tag confusions, pooled over folds"""
    lines = ["gold\tpredicted\tcount"]
    confusion = result.pooled_pos.confusion
    for (gold, predicted), count in sorted(confusion.items(), key=lambda item: (-item[1], item[0]))[:limit]:
        lines.append(f"{gold}\t{predicted}\t{count}")
    return "\n".join(lines) + "\n"


def format_report(result: CrossValidationResult) -> str:
    exposition = generate_latest(metrics_registry(result)).decode("utf-8")
    return exposition + "\n" + format_table(result)
