"""Exception hierarchy for the walk simulator."""


class OQRWError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(OQRWError, ValueError):
    """A matrix has the wrong shape for the requested operation."""


class DefinitionError(OQRWError, ValueError):
    """A walk definition is inconsistent (shapes, normalization, parameters)."""


class WindowOverflowError(OQRWError):
    """The lattice window would grow past its hard cap."""


class CorruptedStateError(OQRWError):
    """A block state no longer satisfies its invariants."""


class DeadEndError(OQRWError):
    """No trajectory branch carries positive probability."""


class CannotDilateError(OQRWError):
    """The transition operators leaving a vertex cannot be dilated to a unitary."""


class CanonicalFormError(OQRWError, ValueError):
    """A tripartite state is not of the product form required by the cycle."""


class UnitaryConditionError(OQRWError):
    """The operators do not satisfy the orthogonality condition of unitary walks."""


class DegenerateDistributionError(OQRWError, ValueError):
    """The distribution has zero variance."""


class OutsideSupportError(OQRWError, ValueError):
    """The evaluation point lies outside the support of the density."""
