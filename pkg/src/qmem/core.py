"""Physical constants, unit conventions, and thermal formulas.

Conventions used throughout the package:

* Every public interface takes ordinary frequency in hertz.  Angular
  frequency (rad/s) is internal only; convert with :func:`angular` and
  :func:`ordinary`.
* Temperatures are in kelvin and T = 0 is a legal input everywhere,
  with occupation numbers defined by their zero-temperature limit.
* Times in seconds, capacitances in farads, inductances in henries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values, SI units."""

    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23  # J/K (exact)
    c: float = 299792458.0  # m/s (exact)
    e: float = 1.602176634e-19  # C (exact)


CONSTANTS = PhysicalConstants()


def angular(f_hz):
    """Angular frequency (rad/s) for an ordinary frequency in Hz."""
    return TWO_PI * f_hz


def ordinary(omega_rad_s):
    """Ordinary frequency (Hz) for an angular frequency in rad/s."""
    return omega_rad_s / TWO_PI


def thermal_occupation(f_hz: float, temperature_k: float) -> float:
    """Mean thermal phonon number of a mode at ``f_hz`` and temperature T.

    Bose-Einstein occupation 1/(exp(hbar*omega/k_B*T) - 1), evaluated
    with ``expm1`` so the classical limit hbar*omega << k_B*T keeps full
    precision.  Returns 0 at T = 0.
    """
    if f_hz <= 0.0:
        raise ValueError(f"frequency must be positive, got {f_hz}")
    if temperature_k < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature_k}")
    if temperature_k == 0.0:
        return 0.0
    x = CONSTANTS.hbar * angular(f_hz) / (CONSTANTS.k_B * temperature_k)
    if x > 45.0:
        # occupation ~ exp(-x); avoids overflow in expm1 for deep quantum regime
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def thermal_decoherence_time(quality_factor: float, f_hz: float, temperature_k: float) -> float:
    """Thermal decoherence time of a mode with quality factor Q.

    Uses tau = 1/((n_th + 1) * Gamma) with Gamma = omega/Q, which reduces
    to Q/omega for hbar*omega >> k_B*T and to hbar*Q/(k_B*T) in the
    high-temperature limit.
    """
    if quality_factor <= 0.0:
        raise ValueError(f"Q must be positive, got {quality_factor}")
    n_th = thermal_occupation(f_hz, temperature_k)
    gamma = angular(f_hz) / quality_factor
    return 1.0 / ((n_th + 1.0) * gamma)


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    return arr


@dataclass(frozen=True)
class FrequencyTrace:
    """Sampled complex response versus frequency.

    ``frequencies`` must be strictly increasing and the same length as
    ``response``.  Magnitude-only data is carried with zero imaginary part.
    """

    frequencies: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        freqs = _as_float_array(self.frequencies, "frequencies")
        resp = np.asarray(self.response, dtype=complex)
        if resp.shape != freqs.shape:
            raise ValueError("frequencies and response must have equal length")
        if np.any(np.diff(freqs) <= 0.0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "response", resp)

    def __len__(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True)
class TimeTrace:
    """Sampled real amplitude versus time, strictly increasing time axis."""

    times: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self):
        times = _as_float_array(self.times, "times")
        amp = _as_float_array(self.amplitude, "amplitude")
        if amp.shape != times.shape:
            raise ValueError("times and amplitude must have equal length")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitude", amp)

    def __len__(self) -> int:
        return self.times.size
