"""Exception types shared across the package."""


class BenctrlError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(BenctrlError):
    """Invalid or unreadable run configuration."""


class QuadratureTooCoarse(BenctrlError):
    """Doubling the quadrature resolution still moves operator entries."""


class SingularOperator(BenctrlError):
    """A dense operator required to be positive definite is not."""


class NonFiniteState(BenctrlError):
    """The evolving state picked up a NaN or infinity (blow-up guard)."""


class StepTooLarge(BenctrlError):
    """Halving dt changed the terminal state beyond tolerance (self check)."""


class NoContraction(BenctrlError):
    """Picard iteration stopped contracting; data too large for the scheme."""


class DegenerateFrequencies(BenctrlError):
    """Resonance function evaluated at k, k1 or k-k1 equal to zero."""


class NonPositiveNorm(BenctrlError):
    """Decay-rate fit requested on non-positive norm samples."""


class DivisionByZeroNorm(BenctrlError):
    """Embedding ratio requested for a field with vanishing norm."""
