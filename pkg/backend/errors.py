"""
Domain errors.

Every error raised on purpose by the library derives from DominanceError, a
ValueError, so callers that only know about ValueError still catch it. Each
class carries the CLI exit code and the HTTP status it maps to.

Exit codes: 0 success (a rejected null is still a success), 2 usage,
3 data, 4 capability or capacity.
"""

from typing import Optional


class DominanceError(ValueError):
    """Base class for all library errors"""

    exit_code = 2
    http_status = 400


class ParameterDomainError(DominanceError):
    """A parameter, probability or weight is outside its domain"""


class GridRangeError(DominanceError):
    """An explicit grid does not cover the support of a combination"""


class UnknownTableError(DominanceError):
    """Unknown simulation table or figure preset"""

    http_status = 404


class DataLoadError(DominanceError):
    """Observation or configuration file could not be ingested"""

    exit_code = 3
    http_status = 422

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapacityError(DominanceError):
    """Work exceeds a configured budget (enumeration, h-split dimension)"""

    exit_code = 4
    http_status = 413


class CapabilityError(DominanceError):
    """The family does not support the requested operation"""

    exit_code = 4
    http_status = 501


class UnsupportedConfigurationError(DominanceError):
    """The requested test cannot run on these inputs"""

    exit_code = 4
    http_status = 409
