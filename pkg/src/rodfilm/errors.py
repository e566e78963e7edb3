"""Exception types raised by the rod/film laboratory.

Every failure mode that callers are expected to catch gets its own class so
that scripts can branch on the reason instead of parsing messages.
"""


class RodFilmError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteSample(RodFilmError):
    """A curvature or twist sample is NaN or infinite."""


class DegenerateFrame(RodFilmError):
    """An initial frame violates its invariants (non-unit or non-orthogonal)."""


class NotClosed(RodFilmError):
    """Endpoint position/frame gaps exceed the closure tolerance."""


class AmbiguousAngle(RodFilmError):
    """The closing arc angle is exactly at the branch cut (d(L) = -d(0));
    the sign rule degenerates and no orientation can be chosen honestly."""


class CurvesTooClose(RodFilmError):
    """Two curves approach closer than the separation floor; the linking
    integral (and anything built on it) is numerically meaningless."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NonConvergent(RodFilmError):
    """A computed invariant failed its self-consistency certificate even
    after refinement."""


class EstimatorVariance(RodFilmError):
    """A Monte Carlo estimate is too noisy to support the requested decision."""


class DegenerateTriangle(RodFilmError):
    """A mesh triangle has collapsed below the area floor."""


class NotSpanning(RodFilmError):
    """A surface fails the witness-loop spanning check."""


class TubeNotEmbedded(RodFilmError):
    """Requested tube thickness exceeds what the midline geometry allows."""


class SeedFailed(RodFilmError):
    """No self-intersection-free initial surface could be built at the
    current resolution."""


class SpanningLost(RodFilmError):
    """An update broke the spanning property and rollback could not recover it."""


class LineSearchStalled(RodFilmError):
    """Backtracking line search hit its minimum step without descent."""


class NoFeasibleStep(RodFilmError):
    """Constrained descent step underflowed below 1e-12 of its initial size."""


class ConfigError(RodFilmError):
    """An experiment configuration is malformed or inconsistent."""
