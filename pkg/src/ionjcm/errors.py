"""Exception types shared across the package."""


class IonJcmError(Exception):
    """Base class for all package-specific errors."""


class TruncationTooSmall(IonJcmError):
    """The Fock-space truncation cannot hold the requested object accurately."""


class DimensionMismatch(IonJcmError):
    """Operands were built on incompatible bases or matrix sizes."""


class NonConvergence(IonJcmError):
    """The eigensolver failed to converge within its iteration cap."""


class NotAtRoot(IonJcmError):
    """Parameters do not satisfy the compatibility condition det M = 0."""


class KernelNotFound(IonJcmError):
    """Neither the forward recursion nor the fallback produced a kernel vector."""


class OmegaZero(IonJcmError):
    """The coupling-free limit is outside the ansatz construction's domain."""


class EmptyRange(IonJcmError):
    """A root search was given an empty or non-finite interval."""
