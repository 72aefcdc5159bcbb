"""Dissipation channels and their temperature dependence.

Each channel contributes an inverse quality factor Q_i^-1(f, T); the
total is Q = (sum_i Q_i^-1)^-1.  Relaxation-type losses (phonon-phonon
scattering in the Akhiezer regime, thermoelastic damping, impurity
relaxation) share the Zener form

    Q^-1 = Delta * omega*tau / (1 + (omega*tau)^2),

peaking at omega*tau = 1, with an Arrhenius bath relaxation time
tau(T) = tau0 * exp(T_a/T).  Ballistic phonon-phonon loss enters as a
power law Q^-1 = B*T^n (n near 4), and pressure- or geometry-limited
floors as constant channels.  ``fit_loss_stack`` adjusts all channel
parameters of a template stack to measured Q(T) data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .core import angular
from .errors import DegenerateJacobian, FitDidNotConverge


@dataclass(frozen=True)
class ZenerChannel:
    """Relaxation loss with strength ``delta`` and Arrhenius bath time.

    tau(T) = tau0 * exp(activation_temp / T).
    """

    delta: float
    tau0: float
    activation_temp: float = 0.0

    def __post_init__(self):
        if self.delta <= 0.0 or self.tau0 <= 0.0:
            raise ValueError("delta and tau0 must be positive")
        if self.activation_temp < 0.0:
            raise ValueError("activation_temp must be >= 0")

    def q_inverse(self, f_hz: float, temperature_k: float) -> float:
        return zener_q_inverse(self, f_hz, temperature_k)


@dataclass(frozen=True)
class PowerLawChannel:
    """Q^-1 = coefficient * T**exponent (Landau-Rumer-type loss)."""

    coefficient: float
    exponent: float = 4.0

    def __post_init__(self):
        if self.coefficient <= 0.0:
            raise ValueError("coefficient must be positive")

    def q_inverse(self, f_hz: float, temperature_k: float) -> float:
        return landau_rumer_q_inverse(self, temperature_k)


@dataclass(frozen=True)
class ConstantChannel:
    """Temperature- and frequency-independent loss floor."""

    q_value: float

    def __post_init__(self):
        if self.q_value <= 0.0:
            raise ValueError("q_value must be positive")

    def q_inverse(self, f_hz: float, temperature_k: float) -> float:
        return 1.0 / self.q_value


Channel = ZenerChannel | PowerLawChannel | ConstantChannel


@dataclass(frozen=True)
class LossStack:
    """A non-empty collection of dissipation channels acting in parallel."""

    channels: tuple[Channel, ...]

    def __post_init__(self):
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("stack must contain at least one channel")
        object.__setattr__(self, "channels", channels)


def zener_q_inverse(channel: ZenerChannel, f_hz: float, temperature_k: float) -> float:
    """Zener relaxation loss Delta*omega*tau/(1 + (omega*tau)^2).

    Evaluated as Delta/(2*cosh(ln(omega*tau))) which keeps full precision
    on both sides of the Debye peak and cannot overflow.
    """
    if temperature_k < 0.0:
        raise ValueError("temperature must be >= 0")
    log_wt0 = math.log(angular(f_hz) * channel.tau0)
    if temperature_k == 0.0:
        if channel.activation_temp > 0.0:
            return 0.0  # tau diverges, omega*tau -> inf
        x = log_wt0
    else:
        x = log_wt0 + channel.activation_temp / temperature_k
    if abs(x) > 300.0:
        return channel.delta * math.exp(-abs(x))
    return channel.delta / (2.0 * math.cosh(x))


def landau_rumer_q_inverse(channel: PowerLawChannel, temperature_k: float) -> float:
    """Power-law loss B*T**n; zero at T = 0."""
    if temperature_k < 0.0:
        raise ValueError("temperature must be >= 0")
    if temperature_k == 0.0:
        return 0.0
    return channel.coefficient * temperature_k**channel.exponent


def total_q_inverse(stack: LossStack, f_hz: float, temperature_k: float) -> float:
    """Summed inverse quality factor of all channels."""
    return sum(ch.q_inverse(f_hz, temperature_k) for ch in stack.channels)


def total_q(stack: LossStack, f_hz: float, temperature_k: float) -> float:
    """Total quality factor Q = (sum_i Q_i^-1)^-1."""
    return 1.0 / total_q_inverse(stack, f_hz, temperature_k)


@dataclass(frozen=True)
class QvsTDataset:
    """Measured quality factor versus temperature with 1-sigma errors."""

    temperatures: np.ndarray
    q_values: np.ndarray
    sigma_q: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        q = np.asarray(self.q_values, dtype=float)
        s = np.asarray(self.sigma_q, dtype=float)
        if not (t.shape == q.shape == s.shape) or t.ndim != 1 or t.size == 0:
            raise ValueError("temperatures, q_values, sigma_q must be equal-length 1-D")
        if np.any(t <= 0.0) or np.any(q <= 0.0) or np.any(s <= 0.0):
            raise ValueError("T, Q, sigma_Q must all be positive")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("temperatures must be strictly increasing")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "q_values", q)
        object.__setattr__(self, "sigma_q", s)

    def __len__(self) -> int:
        return self.temperatures.size

    @classmethod
    def from_csv(cls, path) -> "QvsTDataset":
        """Read a dataset from CSV with header ``T_K,Q,sigma_Q``."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["T_K", "Q", "sigma_Q"]:
                raise ValueError(f"{path}: expected header 'T_K,Q,sigma_Q'")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rows.append((float(row[0]), float(row[1]), float(row[2])))
                except (IndexError, ValueError) as exc:
                    raise ValueError(f"{path}: bad row at line {lineno}: {row}") from exc
        t, q, s = (np.array(col) for col in zip(*rows))
        return cls(t, q, s)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T_K", "Q", "sigma_Q"])
            for t, q, s in zip(self.temperatures, self.q_values, self.sigma_q):
                writer.writerow([repr(float(t)), repr(float(q)), repr(float(s))])


# Internal parameter packing for the stack fit: positive scale parameters
# are optimized in log space, activation_temp and exponent stay linear
# with a lower bound at zero.
_LOG_PARAMS = {
    ZenerChannel: ("delta", "tau0"),
    PowerLawChannel: ("coefficient",),
    ConstantChannel: ("q_value",),
}
_LINEAR_PARAMS = {
    ZenerChannel: ("activation_temp",),
    PowerLawChannel: ("exponent",),
    ConstantChannel: (),
}


def _pack(stack: LossStack):
    names, theta, lower = [], [], []
    for idx, ch in enumerate(stack.channels):
        for attr in _LOG_PARAMS[type(ch)]:
            names.append((idx, attr, "log"))
            theta.append(math.log(getattr(ch, attr)))
            lower.append(-np.inf)
        for attr in _LINEAR_PARAMS[type(ch)]:
            names.append((idx, attr, "lin"))
            theta.append(getattr(ch, attr))
            lower.append(0.0)
    return names, np.array(theta), np.array(lower)


def _unpack(stack: LossStack, names, theta) -> LossStack:
    channels = list(stack.channels)
    for (idx, attr, kind), value in zip(names, theta):
        v = math.exp(value) if kind == "log" else float(value)
        channels[idx] = replace(channels[idx], **{attr: v})
    return LossStack(tuple(channels))


@dataclass(frozen=True)
class LossStackFit:
    """Fitted stack with 1-sigma uncertainties per channel parameter."""

    stack: LossStack
    uncertainties: tuple[dict, ...]
    residual_norm: float


def fit_loss_stack(data: QvsTDataset, f_hz: float, template: LossStack) -> LossStackFit:
    """Weighted nonlinear least squares of a channel stack on Q(T) data.

    Residuals are taken on log Q^-1 (weights sigma_Q/Q) so channels that
    differ by orders of magnitude across the temperature span contribute
    evenly.  The template's parameter values serve as the deterministic
    initial guess.  Raises ``FitDidNotConverge`` or, for unidentifiable
    templates, ``DegenerateJacobian``.
    """
    names, theta0, lower = _pack(template)
    n_params = len(names)
    if len(data) < 2 * n_params:
        raise ValueError(
            f"need at least {2 * n_params} points for {n_params} free parameters, "
            f"got {len(data)}"
        )
    log_qinv_data = -np.log(data.q_values)
    sigma_log = data.sigma_q / data.q_values

    def residuals(theta):
        stack = _unpack(template, names, theta)
        model = np.array([
            total_q_inverse(stack, f_hz, t) for t in data.temperatures
        ])
        return (np.log(model) - log_qinv_data) / sigma_log

    result = least_squares(
        residuals, theta0, bounds=(lower, np.inf), method="trf",
        ftol=1e-15, xtol=1e-15, gtol=1e-15, x_scale="jac",
    )
    if not result.success:
        raise FitDidNotConverge(f"loss-stack fit failed: {result.message}")

    jac = result.jac
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < 1e-10:
        raise DegenerateJacobian("loss-stack template parameters are not identifiable")
    dof = max(len(data) - n_params, 1)
    variance = 2.0 * result.cost / dof
    cov = np.linalg.inv(jac.T @ jac) * variance
    sigma_theta = np.sqrt(np.diag(cov))

    fitted = _unpack(template, names, result.x)
    uncertainties: list[dict] = [dict() for _ in template.channels]
    for (idx, attr, kind), s, value in zip(names, sigma_theta, result.x):
        sigma = s * math.exp(value) if kind == "log" else s
        uncertainties[idx][attr] = sigma
    return LossStackFit(
        stack=fitted,
        uncertainties=tuple(uncertainties),
        residual_norm=math.sqrt(2.0 * result.cost),
    )
