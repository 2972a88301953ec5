"""Exception taxonomy shared across the package."""


class MvsdeError(Exception):
    """Base class for all package errors."""


class DimensionError(MvsdeError):
    """Operands live in incompatible spaces."""


class ResolventDomainError(MvsdeError):
    """Resolvent requested at a point not to the right of the stability bound."""


class NumericalSingularityError(MvsdeError):
    """A linear solve failed or its residual exceeded the certified tolerance."""


class NumericalRangeError(MvsdeError):
    """Overflow or non-finite values produced during propagation."""


class EllipticityError(MvsdeError):
    """Divergence-form coefficient violates ellipticity or boundedness."""


class StepSizeError(MvsdeError):
    """Non-positive time step."""


class SupportMismatchError(MvsdeError):
    """Empirical measures with different atom counts or dimensions."""


class GridError(MvsdeError):
    """Time grids differ where a shared grid is required."""


class CouplingError(MvsdeError):
    """Path ensembles are not pathwise coupled (grid, size or seed mismatch)."""


class DegenerateInputError(MvsdeError):
    """Initial laws coincide; the dependence ratio is undefined."""


class ConfigError(MvsdeError):
    """Malformed or inconsistent experiment configuration."""


class IoError(MvsdeError):
    """Report could not be written."""
