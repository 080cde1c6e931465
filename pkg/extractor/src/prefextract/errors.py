"""Error taxonomy for the extraction pipeline.

Record-level failures are collected in a rejects file; they never abort
the job. Configuration problems raise immediately.
"""


class ExtractorError(Exception):
    """Base class for all extractor errors."""


class JobConfigError(ExtractorError):
    """The job description is malformed; raised before any request is sent."""


class RecordError(ExtractorError):
    """A failure scoped to one input record."""


class EndpointUnreachable(RecordError):
    """Connection failure or server error that survived the retry budget."""


class TokenizationFailure(RecordError):
    """The endpoint could not tokenize a response text."""


class SchemaViolation(RecordError):
    """The assembled record would not satisfy the dataset schema."""
