"""
Exception Hierarchy for the STT-MRAM Reliability Laboratory

All engine errors derive from SttLabError, itself a ValueError, so callers
that only care about "invalid parameter combination" can keep catching
ValueError.
"""


class SttLabError(ValueError):
    """Base class for every error raised by the reliability engines."""


class OutOfRangeError(SttLabError):
    """A numeric input or intermediate result left its representable range."""


class NonConvergentIntegralError(SttLabError):
    """An MTTF integral did not converge within the allowed horizon."""


class UnattainableTargetError(SttLabError):
    """A design target cannot be met inside the search bracket."""


class CodeConstructionError(SttLabError):
    """Code parameters violate a bound or no field polynomial is available."""


class LengthMismatchError(SttLabError):
    """A data word or codeword has the wrong number of bits."""


class AddressError(SttLabError):
    """Word address outside the simulated array."""


class ClockError(SttLabError):
    """An operation tried to move the simulated clock backwards."""


class ArrayDimensionError(SttLabError):
    """Requested array is too large to simulate."""


class StepSizeError(SttLabError):
    """Integrator norm drift exceeded its tolerance; reduce dt."""


class SpinTorquePoleError(SttLabError):
    """The selected spin-torque angular factor diverges on [0, pi]."""


class CriticalCurrentError(SttLabError):
    """No switching occurred at the top of the current-density bracket."""


class DegenerateDistributionError(SttLabError):
    """Sampled read currents violate the nominal I_P > I_AP ordering."""


class ConfigError(SttLabError):
    """Experiment configuration is inconsistent or contains unknown keys."""


class VerificationFailure(SttLabError):
    """A codec verification cell disagreed with the expected capability."""
