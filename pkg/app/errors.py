"""
Exception hierarchy shared by the services and the CLI.

Every error carries the exit code the CLI reports for it.
"""
from typing import Optional


class ShimuraError(Exception):
    """Base class for all errors raised by the signature engine."""

    exit_code: int = 1

    def __init__(self, message: str, *, detail: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


# =============================================================================
# Input errors (exit code 2)
# =============================================================================

class InputError(ShimuraError):
    """The request cannot be served as stated."""

    exit_code = 2


class NonFundamentalDiscriminant(InputError):
    pass


class NotTotallyReal(InputError):
    pass


class NotSquarefree(InputError):
    pass


class NotCoprime(InputError):
    pass


class ParityViolation(InputError):
    pass


class NotAdmissible(InputError):
    pass


class AmbiguousIdeal(InputError):
    """Several ideal pairs match a (d_F, D, N) query; `labels` lists them."""

    def __init__(self, message: str, labels: list[str]):
        super().__init__(message, detail={"labels": labels})
        self.labels = labels


class NotFound(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", detail={"line": line})
        self.line = line


class CountMismatch(InputError):
    pass


# =============================================================================
# Internal inconsistencies (exit code 3)
# =============================================================================

class InternalInconsistency(ShimuraError):
    """An exact identity failed; some upstream invariant is wrong."""

    exit_code = 3


class NonIntegralClassNumber(InternalInconsistency):
    pass


class NonIntegralCount(InternalInconsistency):
    pass


class UnitSearchInconclusive(InternalInconsistency):
    pass


class PrecisionTooLow(InternalInconsistency):
    pass


class ClassNumberUnavailable(InternalInconsistency):
    pass
