"""Exception types shared across the package.

Computation failures (fits, solvers) derive from :class:`ComputationError`
so the command-line layer can map them to a common exit code.  Input and
configuration problems raise :class:`ConfigError` or plain ``ValueError``.
"""


class QmemError(Exception):
    """Base class for all package-specific errors."""


class ComputationError(QmemError):
    """A numerical routine failed to produce a usable result."""


class FitDidNotConverge(ComputationError):
    """Nonlinear least squares terminated without convergence."""


class DegenerateJacobian(ComputationError):
    """Fit Jacobian is rank deficient, parameters are not identifiable."""


class ResonanceNotInWindow(ComputationError):
    """Admittance trace shows no series resonance inside the window."""


class NoPeakFound(ComputationError):
    """Frequency trace has no resonance peak above the noise floor."""


class NonDecayingTrace(ComputationError):
    """Time trace does not decay on the recorded span."""


class NoDefectModeInGap(ComputationError):
    """No localized mode found inside the requested band gap."""


class DegenerateModes(QmemError):
    """Mode detunings too small for the perturbative dressing to apply."""


class DriveOnResonance(QmemError):
    """Parametric drive frequency coincides with the mixer resonance."""


class DriveOffDifferenceFrequency(QmemError):
    """Drive does not match the qubit-mechanics difference frequency."""


class StepTooLarge(QmemError):
    """Integrator step violates the stability precondition."""


class OutOfDefect(QmemError):
    """Position outside the defect cell where the standing wave is defined."""


class ConfigError(QmemError):
    """Configuration document missing or malformed."""
