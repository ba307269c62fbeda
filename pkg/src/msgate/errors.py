"""Exception hierarchy.

``PhysicsGuardError`` subclasses are raised when a run leaves its regime of
validity (truncation, norm); the CLI maps them to exit code 3.
"""


class MSGateError(Exception):
    """Base class for all package errors."""


class ConfigError(MSGateError, ValueError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class CutoffExceeded(MSGateError, ValueError):
    """Requested state does not fit below the Fock cutoff."""


class NonNormalizable(MSGateError, ValueError):
    """All retained amplitudes vanish after truncation."""


class PoleAtResonance(MSGateError, ValueError):
    """Detuning sits on the sideband pole (delta = nu)."""


class CarrierPole(MSGateError, ValueError):
    """Detuning sits on the carrier (delta = 0)."""


class ScheduleGap(MSGateError, ValueError):
    """Time lies outside the detuning schedule."""


class UnknownGate(MSGateError, KeyError):
    """Gate name not recognised."""


class GridMismatch(MSGateError, ValueError):
    """Trajectory records sampled on different time grids."""


class DimensionTooLarge(MSGateError, ValueError):
    """Dense density-matrix evolution requested on too large a space."""


class NoOscillation(MSGateError, ValueError):
    """Signal has too small a dynamic range to extract a frequency."""


class PhysicsGuardError(MSGateError, RuntimeError):
    """A run violated a numerical-validity guard."""


class TruncationBreach(PhysicsGuardError):
    """Population near the Fock cutoff exceeded the guard tolerance."""


class NormDrift(PhysicsGuardError):
    """Closed-system norm drifted beyond tolerance."""
