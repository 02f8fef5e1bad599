from .confusion import BACKEND, ConfusionMatrix
from .evaluator import evaluate
from .inference import (
    BadWindowError,
    infer_slide,
    infer_whole,
    labels_from_logits,
    slide_logits,
    whole_logits,
)
from .metrics import EmptyMatrixError, MetricsReport, compute_metrics

__all__ = [
    "BACKEND",
    "BadWindowError",
    "ConfusionMatrix",
    "EmptyMatrixError",
    "MetricsReport",
    "compute_metrics",
    "evaluate",
    "infer_slide",
    "infer_whole",
    "labels_from_logits",
    "slide_logits",
    "whole_logits",
]
