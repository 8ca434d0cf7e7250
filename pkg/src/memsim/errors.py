"""Exception types shared across the toolkit."""


class MemsimError(Exception):
    """Base class for all toolkit errors."""


class CapacityError(MemsimError):
    """Requested matrix dimension exceeds the configured maximum."""


class NotHermitian(MemsimError):
    """Matrix is not Hermitian within tolerance."""


class NoConvergence(MemsimError):
    """Eigensolver failed to converge."""


class NotPSD(MemsimError):
    """Matrix has an eigenvalue below the positive-semidefinite floor."""


class InvalidState(MemsimError):
    """A density-matrix invariant is violated; the message names it."""


class OutOfRange(MemsimError):
    """Parameter outside its documented range."""


class NotUnitary(MemsimError):
    """Matrix is not unitary within tolerance."""


class Infeasible(MemsimError):
    """Waveplate solver could not reach the target diagonal."""


class OutputNotPSD(MemsimError):
    """Decoherence produced a non-physical state (inconsistent custom envelope)."""


class ZeroSurvival(MemsimError):
    """Post-selection left no population to renormalize."""


class InsufficientSettings(MemsimError):
    """Tomography records do not span the two-qubit operator space."""


class KernelTooWide(MemsimError):
    """Rejection sampler acceptance rate fell below the usability floor."""
