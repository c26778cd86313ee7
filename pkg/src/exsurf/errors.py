"""Exception types raised by the numerical layers.

Every error that signals proximity to an exceptional point or another
physically meaningful breakdown gets its own class so callers can react
per failure mode (retry, flag a sweep row, refine a step) instead of
parsing messages.
"""


class ExsurfError(Exception):
    """Base class for all library errors."""


class ConfigError(ExsurfError):
    """Invalid or unknown configuration input."""


class DefectivePair(ExsurfError):
    """Left/right eigenvector overlap below threshold before normalization.

    Signals that the biorthogonal frame does not exist, i.e. the matrix is
    (numerically) defective: the hallmark of an exceptional point.
    """


class AmbiguousMatch(ExsurfError):
    """Two band assignments tie in both eigenvalue cost and overlap."""


class NearDegenerate(ExsurfError):
    """Energy gap below threshold; geometric tensor denominators unreliable."""


class StencilCrossesEP(ExsurfError):
    """Finite-difference stencil could not be band-matched across an EP."""


class NegativeDeterminant(ExsurfError):
    """det g below tolerance; the metric volume element is undefined here."""


class GridHitsEP(ExsurfError):
    """A quadrature grid point (or the manifold itself) is too close to an EP."""


class EPOnPath(ExsurfError):
    """A parameter path passes through or too close to an exceptional point."""


class NoClosure(ExsurfError):
    """Band permutation failed to compose to identity within max_loops."""


class RefOnSpectrum(ExsurfError):
    """Winding reference energy coincides with a spectrum point."""


class SingularStateMatrix(ExsurfError):
    """Trajectory state matrix is not invertible; propagator fit impossible."""


class BranchAmbiguity(ExsurfError):
    """|E*dt| >= pi/2 during propagator-log fit; principal branch unsafe."""


class TruncationViolation(ExsurfError):
    """Population leaked out of the modeled Hilbert-space sector."""


class VanishingProjection(ExsurfError):
    """Postselection subspace carries (numerically) zero weight."""
