"""Exception types shared across the package."""
from __future__ import annotations


class KS1DError(Exception):
    """Base class for all package errors."""


class NegativeDensityError(KS1DError):
    """Cell density below the round-off floor."""


class MassMismatchError(KS1DError):
    """Integral of the density differs from the declared total mass."""


class NegativeArgumentError(KS1DError):
    """Diffusivity queried at a negative density."""


class TailNotIntegrableError(KS1DError):
    """The diffusivity has no certified integrable tail, so the flux
    primitive normalised at infinity does not exist."""


class BoundViolatedError(KS1DError):
    """A declared decay bound fails at some sample point."""


class EpsZeroError(KS1DError):
    """Operation requires a positive chemical relaxation time."""


class SingularSystemError(KS1DError):
    """Quasi-static chemical solve with gamma = 0 and incompatible data."""


class StepRejectedError(KS1DError):
    """Time step produced negative or non-finite densities."""


class QOutOfRangeError(KS1DError):
    """Moment exponent outside the admissible interval."""


class NotCertifiedError(KS1DError):
    """Blow-up time bound requested for a non-negative certificate."""


class ModelNotCertifiableError(KS1DError):
    """Diffusion model lacks a declared (c1, p) decay bound, or the bound
    check failed."""


class ThresholdPreconditionError(KS1DError):
    """Perturbation threshold requested but the unperturbed certificate is
    not negative."""


class UnresolvedMomentError(KS1DError):
    """Moment quadrature disagrees between the working and the refined grid
    beyond 1%, so certification would hinge on discretisation error."""


class DeltaOutOfRangeError(KS1DError):
    """Ramp width outside (0, 1]."""


class FileParseError(KS1DError):
    """Malformed tabulated input file."""


class ComparisonViolatedError(KS1DError):
    """Cumulative chemical profile dropped below its barrier subsolution."""


class ConfigError(KS1DError):
    """Invalid or unparsable run configuration."""
