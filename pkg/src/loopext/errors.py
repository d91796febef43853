"""Exception types shared across the package."""


class LoopExtError(Exception):
    """Base class for all package errors."""


class AntipodalSingularity(LoopExtError):
    """A logarithm or contraction was requested too close to the antipode -e."""


class EndpointMismatch(LoopExtError):
    """Two paths that must share endpoints do not."""


class BoundaryMismatch(LoopExtError):
    """Disk boundaries that must agree sample-wise do not."""


class MeshMismatch(LoopExtError):
    """Operands sampled on incompatible meshes."""


class BaseMismatch(LoopExtError):
    """Bundle loops over different base loops."""


class MiddleMismatch(LoopExtError):
    """Gerbe elements whose middle loops do not agree."""


class FusionContextMismatch(LoopExtError):
    """Element boundaries do not match the joined loops of the path context."""


class ActionConditionViolated(LoopExtError):
    """A trivialization failed the gerbe-product compatibility check."""


class IndeterminateEquivalence(LoopExtError):
    """Equivalence test landed in the gray band around the tolerance.

    Carries the measured circle distance (in turns) and the band bounds.
    """

    def __init__(self, distance, tolerance, band_upper):
        self.distance = distance
        self.tolerance = tolerance
        self.band_upper = band_upper
        super().__init__(
            f"circle distance {distance:.3e} inside gray band "
            f"[{tolerance:.3e}, {band_upper:.3e}]"
        )


class NonConvergence(LoopExtError):
    """Successive quadrature refinements disagree beyond tolerance."""


class ConfigError(LoopExtError):
    """Malformed suite configuration."""
