import math

import numpy as np
import pytest

from qmem.core import angular
from qmem.errors import DegenerateJacobian
from qmem.losses import (
    ConstantChannel,
    LossStack,
    PowerLawChannel,
    QvsTDataset,
    ZenerChannel,
    fit_loss_stack,
    landau_rumer_q_inverse,
    total_q,
    zener_q_inverse,
)


def peaked_zener(f_hz, t_peak, delta=1e-4, activation_temp=150.0):
    """Zener channel whose Debye peak sits at ``t_peak`` for frequency f."""
    tau0 = math.exp(-activation_temp / t_peak) / angular(f_hz)
    return ZenerChannel(delta=delta, tau0=tau0, activation_temp=activation_temp)


def test_zener_peak_value_is_half_delta():
    f = 100e6
    ch = peaked_zener(f, 40.0, delta=1e-4)
    assert zener_q_inverse(ch, f, 40.0) == pytest.approx(5e-5, rel=1e-10)
    # the peak is the global maximum over temperature
    temps = np.linspace(5.0, 300.0, 2000)
    values = [zener_q_inverse(ch, f, t) for t in temps]
    assert max(values) <= 5e-5 * (1 + 1e-10)


def test_zener_low_frequency_asymptote():
    ch = ZenerChannel(delta=1e-4, tau0=1e-12, activation_temp=0.0)
    f = 1e3  # omega*tau ~ 6e-9
    wt = angular(f) * ch.tau0
    assert zener_q_inverse(ch, f, 10.0) == pytest.approx(ch.delta * wt, rel=1e-12)


def test_zener_extreme_arguments_do_not_overflow():
    ch = ZenerChannel(delta=1e-4, tau0=1e-12, activation_temp=5000.0)
    assert zener_q_inverse(ch, 1e8, 1.0) == 0.0  # omega*tau astronomically large
    assert zener_q_inverse(ch, 1e8, 0.0) == 0.0


def test_landau_rumer_power_law():
    ch = PowerLawChannel(coefficient=1e-10, exponent=4.0)
    assert landau_rumer_q_inverse(ch, 0.0) == 0.0
    ratio = landau_rumer_q_inverse(ch, 20.0) / landau_rumer_q_inverse(ch, 10.0)
    assert ratio == pytest.approx(16.0, rel=1e-12)


def test_total_q_parallel_constants():
    stack = LossStack((ConstantChannel(1e6), ConstantChannel(1e6)))
    assert total_q(stack, 1e8, 10.0) == pytest.approx(5e5, rel=1e-12)


def test_total_q_single_channel_identity():
    stack = LossStack((ConstantChannel(3.3e5),))
    assert total_q(stack, 1e8, 4.0) == pytest.approx(3.3e5, rel=1e-12)


def test_total_q_bounded_by_smallest_channel_q():
    f = 1e8
    stack = LossStack((
        peaked_zener(f, 40.0, delta=4e-5),
        PowerLawChannel(coefficient=2e-10, exponent=4.0),
        ConstantChannel(1.2e6),
    ))
    for t in np.linspace(2.0, 300.0, 50):
        q_total = total_q(stack, f, t)
        q_each = [1.0 / ch.q_inverse(f, t) for ch in stack.channels if ch.q_inverse(f, t) > 0]
        assert q_total <= min(q_each) * (1 + 1e-12)


def test_total_q_monotone_under_extra_loss():
    f = 1e8
    base = LossStack((ConstantChannel(1e6),))
    worse = LossStack((ConstantChannel(1e6), ConstantChannel(5e6)))
    assert total_q(worse, f, 10.0) < total_q(base, f, 10.0)


def make_dataset(stack, f_hz, temps, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    q = np.array([total_q(stack, f_hz, t) for t in temps])
    if noise:
        q = q * (1.0 + noise * rng.standard_normal(len(temps)))
    return QvsTDataset(temps, q, np.maximum(noise, 1e-3) * q)


def test_fit_constant_channel_exact():
    f = 1e8
    truth = LossStack((ConstantChannel(6.8e5),))
    data = make_dataset(truth, f, np.linspace(4.0, 300.0, 20))
    fit = fit_loss_stack(data, f, LossStack((ConstantChannel(1e5),)))
    assert fit.stack.channels[0].q_value == pytest.approx(6.8e5, rel=1e-9)
    assert fit.residual_norm < 1e-10


def test_fit_noiseless_self_generated_reaches_zero_residual():
    f = 1e8
    truth = LossStack((
        peaked_zener(f, 40.0, delta=4e-5),
        PowerLawChannel(coefficient=2e-10, exponent=4.0),
    ))
    temps = np.geomspace(4.0, 300.0, 30)
    data = make_dataset(truth, f, temps)
    template = LossStack((
        peaked_zener(f, 35.0, delta=2e-5),
        PowerLawChannel(coefficient=5e-10, exponent=3.6),
    ))
    fit = fit_loss_stack(data, f, template)
    assert fit.residual_norm < 1e-8


def test_fit_recovers_exponent_within_one_percent():
    f = 1e8
    truth = LossStack((
        peaked_zener(f, 40.0, delta=4e-5),
        PowerLawChannel(coefficient=2e-10, exponent=4.0),
    ))
    temps = np.geomspace(4.0, 300.0, 30)
    data = make_dataset(truth, f, temps)
    template = LossStack((
        peaked_zener(f, 35.0, delta=2e-5),
        PowerLawChannel(coefficient=5e-10, exponent=3.6),
    ))
    fit = fit_loss_stack(data, f, template)
    assert fit.stack.channels[1].exponent == pytest.approx(4.0, rel=1e-2)


def test_fit_two_channel_noisy_within_three_sigma():
    f = 1e8
    truth = LossStack((
        peaked_zener(f, 40.0, delta=4e-5),
        PowerLawChannel(coefficient=2e-10, exponent=4.0),
    ))
    temps = np.geomspace(4.0, 300.0, 40)
    data = make_dataset(truth, f, temps, noise=0.01, seed=11)
    template = LossStack((
        peaked_zener(f, 35.0, delta=2e-5),
        PowerLawChannel(coefficient=5e-10, exponent=3.7),
    ))
    fit = fit_loss_stack(data, f, template)
    for fitted, sigma, truth_ch in zip(fit.stack.channels, fit.uncertainties, truth.channels):
        for name, s in sigma.items():
            value = getattr(fitted, name)
            expected = getattr(truth_ch, name)
            assert abs(value - expected) < 3.0 * s + 1e-12 * abs(expected), name


def test_fit_requires_enough_points():
    f = 1e8
    template = LossStack((
        peaked_zener(f, 40.0),
        PowerLawChannel(coefficient=1e-10, exponent=4.0),
    ))
    data = QvsTDataset([10.0, 20.0, 30.0], [1e5, 1e5, 1e5], [1e3, 1e3, 1e3])
    with pytest.raises(ValueError):
        fit_loss_stack(data, f, template)


def test_fit_degenerate_template_rejected():
    f = 1e8
    truth = LossStack((ConstantChannel(5e5),))
    data = make_dataset(truth, f, np.linspace(4.0, 300.0, 20))
    template = LossStack((ConstantChannel(4e5), ConstantChannel(4e5)))
    with pytest.raises(DegenerateJacobian):
        fit_loss_stack(data, f, template)


def test_dataset_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        QvsTDataset([10.0, 10.0], [1e5, 1e5], [1e3, 1e3])
    with pytest.raises(ValueError):
        QvsTDataset([10.0, 20.0], [1e5, -1.0], [1e3, 1e3])
    data = QvsTDataset([8.0, 20.0, 40.0], [6.8e5, 1e5, 4e4], [1e3, 1e3, 1e3])
    path = tmp_path / "qvt.csv"
    data.to_csv(path)
    loaded = QvsTDataset.from_csv(path)
    assert np.allclose(loaded.temperatures, data.temperatures)
    assert np.allclose(loaded.q_values, data.q_values)
    bad = tmp_path / "bad.csv"
    bad.write_text("T,Q,s\n1,2,3\n")
    with pytest.raises(ValueError):
        QvsTDataset.from_csv(bad)
