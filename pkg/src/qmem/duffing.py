"""Driven Duffing resonator: steady state, hysteretic sweeps, backbone.

Single-harmonic balance for x'' + (omega0/Q)x' + omega0^2 x + beta_a x^3
= F_a cos(omega t) gives the amplitude equation

    a^2 [ (f0^2 - f^2 + (3/4) beta a^2)^2 + (f0 f / Q)^2 ] = F^2

written here in ordinary-frequency units (beta = beta_angular/(2*pi)^2,
F = F_angular/(2*pi)^2).  Above a critical drive the cubic in a^2 has
three real roots, the middle one unstable, producing the bistable region
and sweep-direction hysteresis.  beta > 0 is the stiffening convention
(response pulled to higher frequency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import FitDidNotConverge


@dataclass(frozen=True)
class DuffingParams:
    """Linear resonance f0 (Hz), quality factor Q, cubic stiffness beta
    (Hz^2/m^2, > 0 stiffening), and normalized drive force F (m*Hz^2)."""

    f0: float
    Q: float
    beta: float
    drive: float

    def __post_init__(self):
        if self.f0 <= 0.0 or self.Q <= 0.0:
            raise ValueError("f0 and Q must be positive")
        if self.drive < 0.0:
            raise ValueError("drive must be >= 0")


@dataclass(frozen=True)
class SweepResult:
    """Branch-selected amplitudes over a frequency sweep."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    branch_labels: tuple[str, ...]
    bistable_range: tuple[float, float] | None


@dataclass(frozen=True)
class BackboneFit:
    """Fit of f = f0 + A*a^n to peak-response points."""

    f0: float
    A: float
    n: float
    residual_norm: float


def _cubic_coefficients(p: DuffingParams, f_hz: float):
    d = p.f0**2 - f_hz**2
    e = (p.f0 * f_hz / p.Q) ** 2
    return (
        (9.0 / 16.0) * p.beta**2,
        1.5 * p.beta * d,
        d * d + e,
        -p.drive**2,
    )


def _real_positive_roots(coeffs) -> list[float]:
    c3, c2, c1, c0 = coeffs
    if c3 == 0.0:
        # linear response: single root of c1*u + c0 = 0
        u = -c0 / c1
        return [u] if u > 0.0 else []
    roots = np.roots([c3, c2, c1, c0])
    out = []
    for r in roots:
        # tolerate the measure-zero ambiguity at the discriminant boundary
        if abs(r.imag) <= 1e-9 * abs(r) and r.real > 0.0:
            out.append(float(r.real))
    return sorted(out)


def steady_state_amplitudes(p: DuffingParams, f_hz: float) -> list[tuple[float, bool]]:
    """Steady-state response amplitudes at one drive frequency.

    Returns one or three (amplitude, stable) pairs sorted by amplitude.
    Stability follows the slope criterion: a root u = a^2 is stable when
    d(F^2)/du > 0 along the response curve.
    """
    if f_hz <= 0.0:
        raise ValueError("drive frequency must be positive")
    d = p.f0**2 - f_hz**2
    e = (p.f0 * f_hz / p.Q) ** 2
    out = []
    for u in _real_positive_roots(_cubic_coefficients(p, f_hz)):
        slope = (d + 0.75 * p.beta * u) * (d + 2.25 * p.beta * u) + e
        out.append((math.sqrt(u), slope > 0.0))
    return out


def _cubic_discriminant(coeffs) -> float:
    a, b, c, d = coeffs
    return (
        18.0 * a * b * c * d
        - 4.0 * b**3 * d
        + b**2 * c**2
        - 4.0 * a * c**3
        - 27.0 * a**2 * d**2
    )


def _bistable_range(p: DuffingParams, f_lo: float, f_hi: float, n_scan: int = 2001):
    """Interval with three real roots, endpoints refined on the cubic
    discriminant sign change; None when the drive stays subcritical."""
    if p.beta == 0.0 or p.drive == 0.0:
        return None
    freqs = np.linspace(f_lo, f_hi, n_scan)
    disc = np.array([_cubic_discriminant(_cubic_coefficients(p, f)) for f in freqs])
    positive = disc > 0.0
    if not np.any(positive):
        return None

    def disc_at(f):
        return _cubic_discriminant(_cubic_coefficients(p, f))

    idx = np.nonzero(positive)[0]
    lo, hi = freqs[idx[0]], freqs[idx[-1]]
    if idx[0] > 0:
        lo = brentq(disc_at, freqs[idx[0] - 1], freqs[idx[0]], xtol=1e-6 * p.f0)
    if idx[-1] < n_scan - 1:
        hi = brentq(disc_at, freqs[idx[-1]], freqs[idx[-1] + 1], xtol=1e-6 * p.f0)
    return (float(lo), float(hi))


def sweep(
    p: DuffingParams,
    f_start: float,
    f_end: float,
    direction: str = "forward",
    n_points: int = 1001,
) -> SweepResult:
    """Branch-following frequency sweep, reproducing hysteresis.

    The response stays on its current branch until that branch ceases to
    exist, then jumps to the nearest remaining stable amplitude; forward
    and backward sweeps therefore differ only inside the bistable range.
    ``direction`` is "forward" (increasing f) or "backward"; f_start and
    f_end give the frequency window either way.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    f_lo, f_hi = min(f_start, f_end), max(f_start, f_end)
    freqs = np.linspace(f_lo, f_hi, n_points)
    order = freqs if direction == "forward" else freqs[::-1]

    amps = np.empty(n_points)
    labels: list[str] = []
    previous = None
    for i, f in enumerate(order):
        stable = [a for a, ok in steady_state_amplitudes(p, f) if ok]
        if not stable:
            stable = [a for a, _ in steady_state_amplitudes(p, f)]
        if previous is None:
            # entering from outside the window: the connected branch is the
            # one a sweep from far away would ride in on
            rising = direction == "forward"
            entering_high = rising == (p.beta > 0.0)
            a = max(stable) if entering_high else min(stable)
        else:
            a = min(stable, key=lambda s: abs(s - previous))
        previous = a
        amps[i] = a
        labels.append("upper" if a == max(stable) else "lower")

    if direction == "backward":
        amps = amps[::-1]
        labels = labels[::-1]
    return SweepResult(
        frequencies=freqs,
        amplitudes=amps,
        branch_labels=tuple(labels),
        bistable_range=_bistable_range(p, f_lo, f_hi),
    )


def _auto_window(p: DuffingParams) -> tuple[float, float]:
    a_lin = p.drive * p.Q / p.f0**2
    pull = 0.75 * abs(p.beta) * a_lin**2 / p.f0
    width = 10.0 * p.f0 / p.Q + 2.0 * pull
    if p.beta >= 0.0:
        return p.f0 - width, p.f0 + pull + width
    return p.f0 - pull - width, p.f0 + width


def backbone(p: DuffingParams, drive_levels) -> list[tuple[float, float]]:
    """Peak (amplitude, frequency) of the forward sweep per drive level.

    For a stiffening resonator the forward-sweep maximum tracks the
    jump-down point, whose locus versus drive is the backbone curve
    f_peak^2 = f0^2 + (3/4)*beta*a_peak^2, i.e. a shift of about
    3*beta*a_peak^2/(8*f0).
    """
    levels = [float(v) for v in drive_levels]
    if len(levels) < 3:
        raise ValueError("need at least 3 drive levels")
    points = []
    for level in levels:
        pl = DuffingParams(f0=p.f0, Q=p.Q, beta=p.beta, drive=level)
        lo, hi = _auto_window(pl)
        result = sweep(pl, lo, hi, "forward", n_points=4001)
        i = int(np.argmax(result.amplitudes))
        points.append((float(result.amplitudes[i]), float(result.frequencies[i])))
    return points


def fit_backbone(points) -> BackboneFit:
    """Least-squares fit of f = f0 + A*a^n to (amplitude, frequency) points.

    Deterministic initialization: f0 from the smallest frequency, n = 2,
    A from the two-point slope between the extreme amplitudes.  The fit
    is covariant under amplitude rescaling a -> s*a (A -> A/s^n).
    """
    pts = [(float(a), float(f)) for a, f in points]
    if len(pts) < 4:
        raise ValueError("need at least 4 points")
    amps = np.array([a for a, _ in pts])
    freqs = np.array([f for _, f in pts])
    if np.any(amps <= 0.0) or np.unique(amps).size != amps.size:
        raise ValueError("amplitudes must be positive and distinct")

    f0_init = float(np.min(freqs))
    n_init = 2.0
    i_lo, i_hi = int(np.argmin(amps)), int(np.argmax(amps))
    denom = amps[i_hi] ** n_init - amps[i_lo] ** n_init
    a_init = (freqs[i_hi] - freqs[i_lo]) / denom if denom != 0.0 else 1.0
    if a_init == 0.0:
        a_init = 1.0

    def residuals(theta):
        f0, coeff, log_n = theta
        return f0 + coeff * amps ** math.exp(log_n) - freqs

    result = least_squares(
        residuals,
        [f0_init, a_init, math.log(n_init)],
        method="lm",
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
    )
    if not result.success:
        raise FitDidNotConverge(f"backbone fit failed: {result.message}")
    f0, coeff, log_n = result.x
    return BackboneFit(
        f0=float(f0),
        A=float(coeff),
        n=float(math.exp(log_n)),
        residual_norm=math.sqrt(2.0 * result.cost),
    )
