"""Exception and warning types raised by mpk."""


class MPKError(Exception):
    """Base class for all mpk errors."""

    exit_code = 1


class NotSymplectic(MPKError):
    """Matrix fails the symplectic test S^T J S = J."""


class DimensionMismatch(MPKError):
    """Operands have incompatible dimensions."""


class DimensionCollapse(MPKError):
    """A linear map drops the dimension of a subspace."""


class DegenerateGeometry(MPKError):
    """Rank or volume quantities vanish where they must not."""


class IllConditionedSplit(MPKError):
    """Oblique subspace decomposition is numerically unreliable."""

    exit_code = 2


class GridMismatch(MPKError):
    """Grids are incompatible or the requested transform is not representable."""


class NonSPD(MPKError):
    """Matrix is not symmetric positive semidefinite."""


class InsufficientSupport(MPKError):
    """Too few significant samples for a fit."""


class DegenerateTime(MPKError):
    """The propagator has a vanishing upper-right block at this time."""


class ConditioningGuard(MPKError):
    """Input would push the matrix exponential beyond its accuracy range."""

    exit_code = 2


class NonIsotropic(MPKError):
    """Decay certificate is not a scalar multiple of a projector."""


class AliasRisk(UserWarning):
    """Samples reach the grid edge or exceed the resolvable bandwidth."""


class FreeBlock(MPKError):
    """Construction needs a singular B block but B is invertible."""


class ConditionsViolated(MPKError):
    """Decay matrices do not satisfy ker M = ker B and R(N) = R(B)."""
