import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingkz import DomainError, NumericalError, integrable
from isingkz.analysis import (Signal, compare_series, damped_sinusoid, dominant_frequency,
                              fit_damped_sinusoid, fit_power_law, spectral_peaks)
from isingkz.protocols import momentum_grid


def sampled(fn, t_end=100.0, dt=0.01, t0=0.0):
    t = t0 + dt * np.arange(int(round((t_end - t0) / dt)) + 1)
    return Signal(t0, dt, fn(t))


def test_signal_window_and_samples():
    s = sampled(np.sin, 10.0, 0.5)
    w = s.window(2.0, 4.0)
    np.testing.assert_allclose(w.times, [2.0, 2.5, 3.0, 3.5, 4.0])
    assert Signal.from_samples(s.times, s.values).dt == pytest.approx(0.5)
    with pytest.raises(DomainError):
        Signal.from_samples([0.0, 1.0, 3.0], [0, 0, 0])
    with pytest.raises(DomainError):
        s.window(20.0, 30.0)


def test_single_tone_frequency():
    peak = dominant_frequency(sampled(lambda t: np.cos(8 * t)))
    assert peak.frequency == pytest.approx(8.0, abs=0.01)
    assert peak.amplitude == pytest.approx(1.0, rel=0.05)


def test_two_tones():
    peaks = spectral_peaks(sampled(lambda t: np.cos(8 * t) + 0.3 * np.cos(4 * t)))
    assert [p.frequency for p in peaks] == pytest.approx([8.0, 4.0], abs=0.01)
    assert peaks[1].amplitude / peaks[0].amplitude == pytest.approx(0.3, rel=0.02)


def test_flat_signal_has_no_peak():
    with pytest.raises(NumericalError):
        dominant_frequency(sampled(lambda t: np.full_like(t, 0.4)))


def test_short_signal_rejected():
    with pytest.raises(DomainError):
        dominant_frequency(Signal(0.0, 0.1, np.ones(8)))


@pytest.mark.parametrize("decay", [500.0, 40.0])
def test_damped_fit_recovers_parameters(decay):
    truth = dict(amplitude=0.03, frequency=7.81, phase=0.7, decay_time=decay, offset=1e-3)
    fit = fit_damped_sinusoid(sampled(lambda t: damped_sinusoid(t, **truth)), 7.8)
    assert fit.amplitude == pytest.approx(0.03, rel=0.01)
    assert fit.frequency == pytest.approx(7.81, rel=1e-6)
    assert fit.decay_time == pytest.approx(decay, rel=0.01)
    assert fit.q == pytest.approx(decay * 7.81 / (2 * math.pi), rel=0.01)
    assert fit.residual_rms < 1e-10


def test_undamped_fit_reports_infinite_q():
    fit = fit_damped_sinusoid(sampled(lambda t: 0.02 * np.cos(3 * t + 1)), 3.0)
    assert fit.q_infinite and math.isinf(fit.q)
    assert fit.to_dict()["q"] == math.inf


@given(st.floats(0.5, 10.0), st.floats(-math.pi, math.pi), st.floats(10.0, 1e3))
@settings(max_examples=15, deadline=None)
def test_resynthesis_reproduces_clean_data(omega, phase, decay):
    sig = sampled(lambda t: damped_sinusoid(t, 0.1, omega, phase, decay), t_end=60.0, dt=0.02)
    fit = fit_damped_sinusoid(sig, omega)
    again = damped_sinusoid(sig.times, fit.amplitude, fit.frequency, fit.phase,
                            fit.decay_time, fit.offset)
    assert compare_series(sig, again)["max_abs"] < 1e-9


def test_fit_input_checks():
    with pytest.raises(DomainError):
        fit_damped_sinusoid(sampled(np.cos), 0.0)


def test_power_law_examples():
    x = np.array([8.0, 16.0, 32.0, 64.0])
    fit = fit_power_law(x, 3.0 * x ** -0.5)
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    rho = [integrable.kink_density_closed(t) for t in x]
    assert fit_power_law(x, rho).exponent == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(DomainError):
        fit_power_law(x, -x)
    with pytest.raises(DomainError):
        fit_power_law(x[:2], x[:2])


def test_compare_series():
    d = compare_series([1.0, -2.0, 0.5], [1.0, -1.9, 0.5])
    assert d["max_abs"] == pytest.approx(0.1)
    assert d["max_rel"] == pytest.approx(0.05)
    with pytest.raises(DomainError):
        compare_series([1.0], [1.0, 2.0])


def test_post_ramp_oscillation_period_and_quality():
    tau, g = 16.0, 0.5
    s = integrable.ramp_series(tau, grid=momentum_grid(None, 1024), g_target=g, hold=60.0, t_from=0.0)
    fit = fit_damped_sinusoid(Signal(0.0, 0.05, s["sx"] - s["sx_gs"]), 4 * (1 - g))
    est = integrable.period_and_q(tau, g)
    assert fit.period == pytest.approx(est.period, rel=0.02)
    # dephasing is not exponential, so only the scale of Q is meaningful
    assert 0.5 < fit.q / est.q < 2.0
