"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


# -- parameter and grid validation ------------------------------------------

class NegativeAge(SimulationError):
    """An age coordinate was negative."""


class MisalignedGrid(SimulationError):
    """The age step does not equal dt/eps, so characteristics miss the nodes."""


class InitialMassOutOfRange(SimulationError):
    """The integral of the initial bond density must lie strictly in (0, 1)."""


class NegativeInitialDensity(SimulationError):
    """The initial bond density takes negative values."""


class BadBirthRateBounds(SimulationError):
    """The on-rate bounds are not 0 < min <= max."""


class AgeGridTooShort(SimulationError):
    """a_max cannot hold the initial support transported over the horizon."""


class IncompatibleHistory(SimulationError):
    """Supplied past positions disagree with the initial elongation profile."""


# -- stepping ----------------------------------------------------------------

class MassBlowup(SimulationError):
    """Total bond mass reached 1, which the dynamics forbid (scheme failure)."""


class NonFiniteDensity(SimulationError):
    """A density value became NaN or infinite."""


class NonFiniteElongation(SimulationError):
    """An elongation value became NaN or infinite."""


class DivisionByZeroMass(SimulationError):
    """The uncut right-hand side was evaluated at zero total mass (tear-off)."""


class TailBudgetExceeded(SimulationError):
    """Cumulative mass dropped past a_max exceeded the configured budget."""


class ZeroMass(SimulationError):
    """The position equation degenerated: no bonds left to balance the force."""


# -- lookups and pairings ----------------------------------------------------

class HistoryGap(SimulationError):
    """A required past value is not covered by the stored history."""


class MissingSnapshots(SimulationError):
    """The operation needs stored field snapshots and the run kept none."""


class GridMismatch(SimulationError):
    """Two fields that must share a grid do not."""


# -- fixed-point driver ------------------------------------------------------

class NoContraction(SimulationError):
    """Successive iterates stopped shrinking; the window is too long."""


class WindowUnderflow(SimulationError):
    """The requested iteration window fell below one time step."""


# -- diagnostics -------------------------------------------------------------

class BadCoefficients(SimulationError):
    """Riccati comparison needs a strictly positive quadratic coefficient."""


class BadGamma0(SimulationError):
    """gamma0 violates its admissibility ceiling."""


class NonPositiveWindow(SimulationError):
    """The local-existence formula returned a non-positive time."""


class HypothesisViolated(SimulationError):
    """A certificate precondition failed; carries the name of the condition."""


class InsufficientLevels(SimulationError):
    """A refinement study needs at least two grid levels."""


# -- configuration -----------------------------------------------------------

class ConfigNotFound(SimulationError):
    """The scenario name or config path does not resolve to anything."""


class ConfigInvalid(SimulationError):
    """The config file exists but does not follow the documented schema."""
