"""Exception hierarchy.

The command line maps each family to an exit code: input problems exit
with 2, internal consistency failures with 3 and verification failures
with 1.
"""


class LfccError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


# --- Input errors (exit 2) ---


class InputError(LfccError):
    exit_code = 2


class NotCartan(InputError):
    pass


class NotSymmetrizer(InputError):
    pass


class BadOrientation(InputError):
    pass


class NotConnected(InputError):
    pass


class NotARoot(InputError):
    pass


class RankOutOfRange(InputError):
    pass


class NotPrime(InputError):
    pass


class ModuleMismatch(InputError):
    """Two modules over different data or fields were combined."""


class NotEnoughPrimes(InputError):
    pass


class RelationViolation(InputError):
    """An integer lift breaks relation (H2) after reduction mod some prime."""


class ConfigError(InputError):
    pass


# --- Internal consistency failures (exit 3) ---


class InternalConsistencyError(LfccError):
    exit_code = 3


class InterpolationMismatch(InternalConsistencyError):
    """Point counts are not reproduced by the fitted polynomial.

    Carries everything needed to reproduce the failing fit.
    """

    def __init__(self, message: str, samples: list[tuple[int, int]], context: dict) -> None:
        super().__init__(message)
        self.samples = samples
        self.context = context


class CrossCheckMismatch(InternalConsistencyError):
    pass


class InexactDivision(InternalConsistencyError):
    pass


class NegativeExt(InternalConsistencyError):
    pass


class ReconstructionMismatch(InternalConsistencyError):
    pass


class CacheMismatch(InternalConsistencyError):
    pass


class SearchExhausted(InternalConsistencyError):
    pass


class BudgetExceeded(InternalConsistencyError):
    pass


class InvariantViolation(InternalConsistencyError):
    pass


# --- Verification failures (exit 1) ---


class VerificationFailure(LfccError):
    exit_code = 1


class NotFound(VerificationFailure):
    pass


class SingularBasis(VerificationFailure):
    pass
