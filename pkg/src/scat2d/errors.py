"""Exception hierarchy shared by all scat2d modules."""


class Scat2dError(Exception):
    """Base class for all computation errors raised by scat2d."""


# --- special functions ------------------------------------------------------

class NonPositiveArgument(Scat2dError):
    """Cylinder-function argument outside the supported domain x > 0."""


# --- grids / operators ------------------------------------------------------

class BadGridSpec(Scat2dError):
    """Disk-grid parameters violate their preconditions."""


class NonPositiveEnergy(Scat2dError):
    """Energy parameter was required to be strictly positive."""


class BadOrder(Scat2dError):
    """Moment-operator order outside {0, 1, 2}."""


class IllConditionedSplit(Scat2dError):
    """No certified spectral gap across the null-space tolerance.

    A rank decision without a relative gap >= 10 between discarded and kept
    singular values is refused rather than guessed.
    """


# --- potentials / Birman-Schwinger ------------------------------------------

class BadPotentialSpec(Scat2dError):
    """Unknown preset or invalid preset parameters."""


class SingularEnergy(Scat2dError):
    """Boundary-value resolvent requested at lambda <= 0."""


class NearSingularM(Scat2dError):
    """Birman-Schwinger matrix numerically singular at the requested energy."""

    def __init__(self, message: str, cond: float = float("inf")):
        super().__init__(message)
        self.cond = cond


# --- threshold analysis -----------------------------------------------------

class NoSignChange(Scat2dError):
    """Coupling bracket does not straddle a criticality."""


class TuneTargetMismatch(Scat2dError):
    """A criticality was located but is not of the requested kind."""


class DecayFitUnstable(Scat2dError):
    """Far-field decay-exponent fit residual exceeds the acceptance bound."""


class NoObstruction(Scat2dError):
    """Requested threshold-obstruction vector does not exist."""


# --- Levinson ----------------------------------------------------------------

class UnconvergedCount(Scat2dError):
    """Bound-state counts disagree between the two grid resolutions."""


class PhaseAliasing(Scat2dError):
    """Eigenphase motion between sweep samples exceeds pi/4."""


# --- wave operators ----------------------------------------------------------

class UnderResolved(Scat2dError):
    """Spatial grid cannot resolve the wavelength at the top of the window."""


class GridMismatch(Scat2dError):
    """Spectral field does not live on the expected logarithmic grid."""


class PResonancePresent(Scat2dError):
    """Wave-operator formula requested although rank(T3) > 0."""


class BoundaryContamination(Scat2dError):
    """Propagated packet leaked more than the allowed mass into the frame."""


# --- CLI ----------------------------------------------------------------------

class ConfigParse(Scat2dError):
    """Run configuration file missing, malformed, or carrying unknown keys."""
