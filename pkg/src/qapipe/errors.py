"""Exception hierarchy for qapipe.

Every qapipe-specific failure derives from QapipeError so callers can catch
one base class. The CLI maps subfamilies to exit codes: configuration and
usage problems to 1, infeasible or degenerate inputs to 2, I/O failures to 3.
"""


class QapipeError(Exception):
    """Base class for all qapipe errors."""


class ConfigError(QapipeError):
    """Malformed configuration: unknown key, bad type, missing required key."""


class FormatError(QapipeError):
    """Input data file violates its documented schema."""


class Infeasible(QapipeError):
    """Rates or derived probabilities violate a feasibility constraint."""


class ZeroYield(Infeasible):
    """Overall yield is zero: no generated image is ever accepted."""


class DegenerateYield(Infeasible):
    """Filter passes nothing, so its clean precision is undefined."""


class CleanRateMismatch(Infeasible):
    """Supplied clean rate disagrees with the one implied by the defect mix."""


class TooManyDefects(QapipeError):
    """Exhaustive enumeration requested for more defect types than supported."""


class EmptyInput(QapipeError):
    """An aggregation was asked to operate on zero records."""


class ZeroPass(QapipeError):
    """No predicted-clean records, so pass-side rates cannot be derived."""


class NoBreakEven(QapipeError):
    """Savings do not change sign over the searched precision interval."""


class BudgetExceeded(QapipeError):
    """A target-accepted simulation hit its generation cap before finishing."""


class UnknownDefect(QapipeError):
    """Requested defect id is not in the catalog."""


class EmptySubstitution(QapipeError):
    """Prompt substitution value is empty."""


class EndpointError(QapipeError):
    """Detector endpoint returned a failure status or an unusable body."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class EndpointTimeout(EndpointError):
    """Detector endpoint did not answer within the configured timeout."""

    def __init__(self, message: str):
        super().__init__(message, status=None)


class IoError(QapipeError):
    """Report or data file could not be read or written."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path
