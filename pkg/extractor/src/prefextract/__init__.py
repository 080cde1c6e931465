"""Scores prompt/response corpora against model endpoints and emits the
training dataset schema."""

from .core import ExtractionResult, extract_logprobs, score_record
from .errors import (
    EndpointUnreachable,
    ExtractorError,
    JobConfigError,
    RecordError,
    SchemaViolation,
    TokenizationFailure,
)
from .job import EndpointSpec, ExtractionJob, load_job

__version__ = "0.1.0"

__all__ = [
    "EndpointSpec",
    "EndpointUnreachable",
    "ExtractionJob",
    "ExtractionResult",
    "ExtractorError",
    "JobConfigError",
    "RecordError",
    "SchemaViolation",
    "TokenizationFailure",
    "extract_logprobs",
    "load_job",
    "score_record",
]
