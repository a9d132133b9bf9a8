"""Exception hierarchy shared across the pipeline.

The CLI maps these to exit codes: validation errors exit 2, transport
errors exit 3, numeric divergence exits 4.
"""


class ClozeClassError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClozeClassError):
    """Malformed input, violated precondition, or out-of-range value."""


class ParseError(ValidationError):
    """A record file could not be parsed; message names the line number."""

    def __init__(self, path, line_number, reason):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}:{line_number}: {reason}")


class TransportError(ClozeClassError):
    """The inference service is unreachable and no cache entry covers the request."""


class DivergenceError(ClozeClassError):
    """Training produced a non-finite loss or parameter value."""


class UnresolvableWordsError(ValidationError):
    """No word of a phrase or signal set resolves to an embedding."""


class CannotSampleError(ValidationError):
    """The signal vocabulary is too small to draw negative samples from."""


class MissingArtifactError(ValidationError):
    """An upstream pipeline artifact is absent.

    `stage` names the prerequisite stage whose output is missing.
    """

    def __init__(self, stage, path):
        self.stage = stage
        self.path = str(path)
        super().__init__(
            f"missing artifact {self.path}; run the '{stage}' stage first"
        )
