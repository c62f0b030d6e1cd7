import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from isingkz import IntegrationError, RampProtocol, momentum_grid
from isingkz import integrable as ig
from isingkz.analysis import Signal, dominant_frequency


@pytest.fixture(scope="module")
def ramp8():
    ens, protocol = ig.linear_ramp_ensemble(8.0, momentum_grid(None, 1024))
    return ig.evolve_modes(ens, protocol, 0.0)


@pytest.fixture(scope="module")
def ramp32():
    ens, protocol = ig.linear_ramp_ensemble(32.0, momentum_grid(None, 1024))
    return ig.evolve_modes(ens, protocol, 0.0)


# -- stationary modes -----------------------------------------------------------


@pytest.mark.parametrize("g,k,eps", [
    (0.0, 0.3, 2.0),
    (0.0, 2.9, 2.0),
    (1.0, 0.0, 0.0),
    (2.0, np.pi / 2, 2 * math.sqrt(5)),
])
def test_stationary_energy(g, k, eps):
    mode, e = ig.stationary_mode(g, k)
    assert e == pytest.approx(eps, abs=1e-14)
    assert mode.u.real >= 0
    assert mode.norm == pytest.approx(1.0, abs=1e-15)


@given(st.floats(0, 5), st.floats(-np.pi, np.pi))
def test_stationary_mode_is_positive_eigenvector(g, k):
    mode, eps = ig.stationary_mode(g, k)
    a, b = 2 * (g - math.cos(k)), 2 * math.sin(k)
    h = np.array([[a, b], [b, -a]])
    vec = np.array([mode.u, mode.v])
    np.testing.assert_allclose(h @ vec, eps * vec, atol=1e-12)
    assert mode.u.real >= -1e-15


def test_stationary_mode_evolves_by_phase():
    g = 0.7
    grid = momentum_grid(16)
    ens = ig.ground_ensemble(grid, g, t=0.0)
    protocol = RampProtocol.constant(g, t_start=0.0)
    _, _, eps = ig.stationary_uv(g, ens.k)
    T = 1.3
    out = ig.evolve_modes(ens, protocol, T, dt=0.01)
    phase = np.exp(-1j * eps * T)
    np.testing.assert_allclose(out.u, phase * ens.u, atol=1e-11)
    np.testing.assert_allclose(out.v, phase * ens.v, atol=1e-11)


# -- dynamics ------------------------------------------------------------------------


def test_ramp_matches_adaptive_ode_oracle(frozen):
    grid = momentum_grid(None, 4)
    for key, p_ref in frozen["bdg_probability"].items():
        tau, k = (float(x) for x in key.split(":"))
        _, protocol = ig.linear_ramp_ensemble(tau, grid)
        u, v, _ = ig.stationary_uv(ig.ramp_start_field(tau), np.array([k]))
        ens = ig.ModeEnsemble(grid, np.array([k]), np.array([1.0]), u.astype(complex), v.astype(complex),
                              protocol.t_start, ig.ramp_start_field(tau))
        final = ig.evolve_modes(ens, protocol, 0.0)
        assert ig.excitation_probability(final, 0.0)[0] == pytest.approx(p_ref, abs=1e-7)


def test_norm_is_conserved(ramp8, ramp32):
    assert ramp8.norm_error() < 1e-8
    assert ramp32.norm_error() < 1e-8


def test_small_k_matches_landau_zener(ramp8):
    k = ramp8.k
    p = ig.excitation_probability(ramp8, 0.0)
    small = k < 0.05
    np.testing.assert_allclose(p[small], ig.lz_probability(8.0, k[small]), rtol=0.01)


def test_post_ramp_tau32_small_k_within_two_percent(ramp32):
    p = ig.excitation_probability(ramp32, 0.0)
    small = ramp32.k < 0.03
    np.testing.assert_allclose(p[small], ig.lz_probability(32.0, ramp32.k[small]), rtol=0.02)


@pytest.mark.parametrize("fixture", ["ramp8", "ramp32"])
def test_lz_agreement_over_spectrum(fixture, request):
    ens = request.getfixturevalue(fixture)
    tau = 8.0 if fixture == "ramp8" else 32.0
    p = ig.excitation_probability(ens, 0.0)
    mask = p > 1e-4
    assert np.max(np.abs(p - ig.lz_probability(tau, ens.k))[mask]) < 0.02


def test_slow_ramp_on_small_ring_is_adiabatic():
    ens, protocol = ig.linear_ramp_ensemble(512.0, momentum_grid(64))
    final = ig.evolve_modes(ens, protocol, 0.0, dt=0.05)
    p = ig.excitation_probability(final, 0.0)
    assert p[np.argmin(final.k)] < 1e-3


def test_step_halving_check_passes():
    ens, protocol = ig.linear_ramp_ensemble(4.0, momentum_grid(None, 64))
    final = ig.evolve_modes(ens, protocol, 0.0, check=True)
    assert final.norm_error() < 1e-8


def test_non_finite_field_reports_integration_error():
    ens = ig.ground_ensemble(momentum_grid(8), 0.5)
    with pytest.raises(IntegrationError, match="k="):
        ig.evolve_modes(ens, RampProtocol.constant(float("nan"), t_start=0.0), 1.0, dt=0.1)


def test_u_even_v_odd_under_reflection():
    grid = momentum_grid(16)
    k = grid.values
    u, v, _ = ig.stationary_uv(3.0, k)
    protocol = RampProtocol.linear(6.0, t_start=-12.0)
    ens = ig.ModeEnsemble(grid, k, grid.weights, u.astype(complex), v.astype(complex), -12.0, 2.0)
    out = ig.evolve_modes(ens, protocol, 0.0)
    np.testing.assert_allclose(out.u, out.u[::-1], atol=1e-12)
    np.testing.assert_allclose(out.v, -out.v[::-1], atol=1e-12)


def test_evolution_is_deterministic():
    ens, protocol = ig.linear_ramp_ensemble(4.0, momentum_grid(None, 64))
    a = ig.evolve_modes(ens, protocol, -1.0)
    b = ig.evolve_modes(ens, protocol, -1.0)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)


# -- closed forms -------------------------------------------------------------------------


def test_lz_probability_examples():
    assert ig.lz_probability(4.0, 0.0) == 1.0
    assert ig.lz_probability(4.0, 0.05) == pytest.approx(math.exp(-0.02 * math.pi), rel=1e-14)
    assert ig.lz_probability(4.0, 0.05) == pytest.approx(0.9391, abs=1e-4)
    assert ig.lz_probability(8.0, np.pi / 2) < 1e-30
    with pytest.warns(UserWarning):
        ig.lz_probability(0.5, 0.1)


def test_excitation_probability_limits():
    mode, _ = ig.stationary_mode(0.4, 0.8)
    assert ig.excitation_probability(mode, 0.4) == pytest.approx(0.0, abs=1e-30)
    flipped = ig.BogoliubovMode(mode.k, np.conj(mode.v), -np.conj(mode.u))
    assert ig.excitation_probability(flipped, 0.4) == pytest.approx(1.0, abs=1e-14)


def test_kink_density_values(frozen):
    assert ig.kink_density_closed(8.0) == pytest.approx(1 / (8 * math.pi), rel=1e-15)
    assert ig.kink_density_closed(32.0) == pytest.approx(ig.kink_density_closed(8.0) / 2, rel=1e-15)
    for tau, quad_value in frozen["lz_density_quadrature"].items():
        assert quad_value == pytest.approx(ig.kink_density_closed(float(tau)), rel=0.02)


def test_kink_density_from_ramp(ramp8):
    rho = ig.excitation_density(ramp8)
    assert rho * 2 * math.pi * math.sqrt(16.0) == pytest.approx(1.0, abs=0.03)


def test_kzm_scales():
    s = ig.kzm_scales(50.0)
    assert s.xi_hat * s.rho == 1.0
    assert s.t_hat == pytest.approx(math.sqrt(50.0))


# -- observables ------------------------------------------------------------------------


def test_paramagnetic_vacuum_observables():
    grid = momentum_grid(None, 64)
    k, w = grid.positive
    ens = ig.ModeEnsemble(grid, k, w, np.ones_like(k, dtype=complex), np.zeros_like(k, dtype=complex), 0.0, 1e6)
    obs = ig.observables(ens)
    assert obs.sx == 1.0 and obs.zz == 0.0 and obs.yy == 0.0


def test_ferromagnet_observables():
    obs = ig.ground_observables(0.0)
    assert obs.zz == pytest.approx(1.0, abs=1e-14)
    assert obs.sx == pytest.approx(0.0, abs=1e-14)
    assert obs.yy == pytest.approx(0.0, abs=1e-14)
    assert ig.ground_observables(1e4).sx == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("g", ["0.0", "0.5", "1.5", "3.0"])
def test_ground_observables_match_quadrature(frozen, g):
    ref = frozen["infinite_ground"][g]
    obs = ig.ground_observables(float(g))
    assert obs.sx == pytest.approx(ref["sx"], abs=1e-12)
    assert obs.zz == pytest.approx(ref["zz"], abs=1e-12)
    assert obs.energy_density == pytest.approx(ref["e0"], abs=1e-12)
    assert ig.ground_energy_density(float(g)) == pytest.approx(ref["e0"], abs=1e-12)


def test_observables_are_bounded(ramp8):
    obs = ig.observables(ramp8)
    assert abs(obs.sx) <= 1


# -- analytic oscillations -------------------------------------------------------------------


def test_kzm_oscillation_matches_independent_evaluation(frozen):
    ref = frozen["oscillation_tau8_t0"]
    osc = ig.kzm_oscillation(8.0, 0.0)
    for key in ("f", "d", "phi", "delta_x"):
        assert getattr(osc, key) == pytest.approx(ref[key], rel=1e-13)
    assert osc.d == pytest.approx(0.852, abs=1e-3)
    assert osc.delta_x == pytest.approx(0.0803545, abs=1e-6)
    assert not osc.extrapolated


def test_kzm_oscillation_against_ramp(ramp8):
    numeric = ig.observables(ramp8).sx - ig.ground_observables(0.0).sx
    assert numeric == pytest.approx(ig.kzm_oscillation(8.0, 0.0).delta_x, rel=0.05)


def test_kzm_oscillation_zero_of_cosine():
    tau = 16.0

    def cos_phi(t):
        return math.cos(ig.kzm_oscillation(tau, t).phi)

    ts = np.linspace(-12, 0, 400)
    signs = np.sign([cos_phi(t) for t in ts])
    i = int(np.flatnonzero(np.diff(signs))[0])
    t0 = brentq(cos_phi, ts[i], ts[i + 1], xtol=1e-14)
    osc = ig.kzm_oscillation(tau, t0)
    assert osc.delta_x == pytest.approx(2 * osc.rho, abs=1e-15)


@given(st.floats(1, 1e4), st.floats(0.01, 0.999))
def test_kzm_identity_is_exact(tau, frac):
    t = -tau + frac * tau
    osc = ig.kzm_oscillation(tau, t)
    g = osc.g
    assert -osc.delta_zz - g * osc.delta_x == pytest.approx(2 * (1 - g) * osc.rho, abs=1e-15)
    assert 0 < osc.d <= 1


def test_kzm_oscillation_flags_early_times():
    assert ig.kzm_oscillation(64.0, -64.0 + 4.0).extrapolated
    assert not ig.kzm_oscillation(64.0, -64.0 + 9.0).extrapolated


def test_period_and_q_examples():
    assert ig.period_and_q(16.0, 0.5).period == pytest.approx(math.pi)
    assert ig.period_and_q(16.0, 0.5).q == pytest.approx(16.0)
    zero = ig.period_and_q(16.0, 0.0)
    assert zero.period == pytest.approx(math.pi / 2) and math.isinf(zero.q) and zero.dispersionless
    tau = 1e4
    assert ig.period_and_q(tau, 1 - tau ** -0.5).q == pytest.approx(2.0, rel=0.02)
    with pytest.raises(Exception):
        ig.period_and_q(16.0, 1.0)


def test_extended_kzm_relation_along_tail():
    tau = 16.0
    s = ig.ramp_series(tau, sample_dt=0.25, grid=momentum_grid(None, 1024), t_from=-tau + math.sqrt(tau))
    rho = ig.kink_density_closed(tau)
    dx = s["sx"] - s["sx_gs"]
    dzz = s["zz"] - s["zz_gs"]
    assert np.max(np.abs(-dzz - s["g"] * dx - 2 * (1 - s["g"]) * rho)) <= 10 * rho ** 2


def test_post_ramp_frequency_at_fixed_field():
    g = 0.5
    s = ig.ramp_series(16.0, sample_dt=0.05, grid=momentum_grid(None, 1024), g_target=g, hold=40.0, t_from=0.0)
    peak = dominant_frequency(Signal(0.0, 0.05, s["sx"] - s["sx_gs"]))
    assert peak.frequency == pytest.approx(4 * (1 - g), rel=0.02)
