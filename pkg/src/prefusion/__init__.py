"""Preference optimization with fused multi-model sequence probabilities."""

from .errors import PrefusionError, ValidationError
from .fusion import (
    FusionWeights,
    ResponseRole,
    clip_logprob,
    fused_logprob,
    weights_average,
    weights_confidence,
    weights_max_margin,
)
from .objectives import (
    LossReport,
    ObjectiveConfig,
    batch_loss,
    evaluate_record,
    grad_check,
)
from .records import (
    ModelRoster,
    ModelScore,
    PreferenceRecord,
    ScoredResponse,
    emit_record,
    normalized_logprob,
    read_jsonl,
    validate_record,
)

__version__ = "0.1.0"

__all__ = [
    "FusionWeights",
    "LossReport",
    "ModelRoster",
    "ModelScore",
    "ObjectiveConfig",
    "PreferenceRecord",
    "PrefusionError",
    "ResponseRole",
    "ScoredResponse",
    "ValidationError",
    "batch_loss",
    "clip_logprob",
    "emit_record",
    "evaluate_record",
    "fused_logprob",
    "grad_check",
    "normalized_logprob",
    "read_jsonl",
    "validate_record",
    "weights_average",
    "weights_confidence",
    "weights_max_margin",
]
