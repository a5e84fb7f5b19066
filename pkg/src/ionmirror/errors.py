"""Exception types raised by the model, solvers and I/O layers."""


class IonMirrorError(Exception):
    """Base class for all package-specific errors."""


class SingularSystem(IonMirrorError):
    """The stationary manifold is degenerate (rank-deficient steady-state solve).

    Typical causes: both lasers off, or zero magnetic field with coherent
    population trapping, where the steady state is not unique.
    """


class NonPhysical(IonMirrorError):
    """A computed density matrix violates trace, Hermiticity or positivity bounds."""


class StepFailure(IonMirrorError):
    """Adaptive time integration could not meet its tolerance."""


class DegenerateGrid(IonMirrorError):
    """A fringe-fit design matrix is rank deficient (grid does not resolve the fit)."""


class UndefinedPhase(IonMirrorError):
    """A fringe phase is requested but the modulation contrast is below the floor."""


class BadInitial(IonMirrorError):
    """A fit could not evaluate its model at the initial parameter values."""


class ConfigError(IonMirrorError):
    """Invalid run configuration. Message carries file/line/field context."""
