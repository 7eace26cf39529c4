"""Exception types shared across the package."""


class OrtgLabError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(OrtgLabError):
    """CSV header does not match the canonical 51-column schema."""


class RowValidationError(OrtgLabError):
    """A data row violates a value constraint. Carries the 1-based file line."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class FitError(OrtgLabError):
    """Model or transform fitting failed (bad shapes, too few samples, ...)."""


class MetricError(OrtgLabError):
    """A requested metric is undefined for the given inputs."""


class ModelIOError(OrtgLabError):
    """Model file cannot be read, parsed, or is of an unsupported version."""


class WriteError(OrtgLabError):
    """An output file could not be written (exit-2 class at the CLI)."""


class FetchError(OrtgLabError):
    """Base class for remote-fetch failures."""


class TransportError(FetchError):
    """Network-level failure after exhausting retries."""


class StatusError(FetchError):
    """Upstream returned a non-success HTTP status."""

    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(message or f"upstream returned HTTP {status}")


class TranslationError(FetchError):
    """Upstream payload does not match the documented response shape."""
