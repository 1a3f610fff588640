"""Exception and warning types raised across the package."""


class ResonanceError(Exception):
    """Base class for all errors raised by resonance_d."""


class BranchPoint(ResonanceError):
    pass


class OutsideAnalyticityDomain(ResonanceError):
    pass


class StepSizeUnderflow(ResonanceError):
    pass


class DecayViolation(ResonanceError):
    pass


class DivergentIntegral(ResonanceError):
    pass


class XDependenceDetected(ResonanceError):
    pass


class NoAdmissibleRay(ResonanceError):
    pass


class ZeroOnBoundary(ResonanceError):
    pass


class PhaseTrackingFailed(ResonanceError):
    pass


class MaxDepthExceeded(ResonanceError):
    pass


class NotARoot(ResonanceError):
    pass


class SingularAtResonance(ResonanceError):
    pass


class ContourInvalid(ResonanceError):
    pass


class UnsupportedPotential(ResonanceError):
    pass


class ExcludedPoint(ResonanceError):
    pass


class RegionUnreachable(ResonanceError):
    pass


class ConfigError(ResonanceError):
    pass


class NearStripBoundary(UserWarning):
    """Evaluation point is close to the edge of the convergence strip."""


class RegionShrunk(UserWarning):
    """A search region was pulled away from the cut or the branch point."""
