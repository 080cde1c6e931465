"""Exception hierarchy shared across the package.

Validation errors carry enough context (record index, field path) to point
at the offending JSONL line without re-reading the file.
"""


class PrefusionError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(PrefusionError):
    """A dataset record violates the schema or a type invariant."""

    def __init__(self, message, field=None, record_index=None):
        self.field = field
        self.record_index = record_index
        prefix = ""
        if record_index is not None:
            prefix += f"record {record_index}: "
        if field:
            prefix += f"field {field}: "
        super().__init__(prefix + message)


class MissingModel(ValidationError):
    pass


class NonFiniteLogprob(ValidationError):
    pass


class PositiveLogprob(ValidationError):
    pass


class ZeroTokenLen(ValidationError):
    pass


class MissingInternalResponse(ValidationError):
    """The objective needs the source-model preferred response (y_ws)."""


class EmptySourceList(PrefusionError):
    pass


class ZeroModels(PrefusionError):
    pass


class NonPositiveEps(PrefusionError):
    pass


class WeightLengthMismatch(PrefusionError):
    pass


class DegenerateSpace(PrefusionError):
    pass


class SupportMismatch(PrefusionError):
    pass


class ZeroProbability(PrefusionError):
    pass


class TokenOutOfRange(PrefusionError):
    pass


class SequenceTooLong(PrefusionError):
    pass


class EmptyDataset(PrefusionError):
    pass


class NoFixtures(PrefusionError):
    pass
