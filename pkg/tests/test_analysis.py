import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import two_state_solution
from qndsim import scenarios
from qndsim.analysis import (
    FlipRateFit,
    fit_flip_rates,
    map_stationary_state,
    stationary_state,
    sweep_hybridization,
    two_state_p_up,
)
from qndsim.errors import DegenerateNullSpaceError, FitFailure
from qndsim.liouvillian import assemble_ee
from qndsim.protocol import ProtocolSpec, Schedule, period_map
from qndsim.reservoir import RateSet, preset
from qndsim.spin_system import SpinSystemSpec, SystemKind

EXCHANGE = SpinSystemSpec.from_hybridization(SystemKind.HEISENBERG_EE, 2.5e-3, 49.5e9, 49.4e9)


def _series(g_up, g_down, t):
    up, down = two_state_solution(t, g_up, g_down)
    return (t, up), (t, down)


def test_model_matches_oracle():
    t = np.linspace(0, 3, 9)
    up, down = two_state_solution(t, 0.7, 0.2)
    assert_allclose(two_state_p_up(t, 0.7, 0.2, True), up, rtol=1e-14)
    assert_allclose(two_state_p_up(t, 0.7, 0.2, False), down, rtol=1e-14, atol=1e-16)
    assert np.all(two_state_p_up(t, 0.0, 0.0, True) == 1.0)


@pytest.mark.parametrize("g_up,g_down", [(7.11, 1.10), (6.47, 0.18), (6.70, 0.78), (2.42e-3, 3.0e-5)])
def test_round_trip(g_up, g_down):
    t = np.linspace(0, 3 / (g_up + g_down), 60)[1:]
    fit = fit_flip_rates(*_series(g_up, g_down, t))
    assert fit.gamma_up == pytest.approx(g_up, rel=1e-6)
    assert fit.gamma_down == pytest.approx(g_down, rel=1e-6)
    assert fit.residual_rms < 1e-10
    assert fit.equilibrium_p_up == pytest.approx(g_down / (g_up + g_down), rel=1e-6)


def test_flat_down_series_is_pinned():
    t = np.linspace(0.1, 5, 40)
    with pytest.warns(UserWarning, match="gamma_down"):
        fit = fit_flip_rates(*_series(0.8, 0.0, t))
    assert fit.gamma_down == 0.0 and fit.pinned == ("gamma_down",)
    assert fit.gamma_up == pytest.approx(0.8, rel=1e-6)
    assert fit.equilibrium_p_up == 0.0


def test_both_flat():
    t = np.linspace(0.1, 5, 10)
    with pytest.warns(UserWarning):
        fit = fit_flip_rates((t, np.ones_like(t)), (t, np.zeros_like(t)))
    assert fit.pinned == ("gamma_up", "gamma_down") and np.isnan(fit.equilibrium_p_up)


def test_equilibrium_identity():
    fit = FlipRateFit(3.0, 1.0, 0.0)
    assert fit.equilibrium_p_up == 0.25


def test_fit_failure_reports_diagnostics():
    t = np.linspace(0.1, 5, 40)
    with pytest.raises(FitFailure) as err:
        fit_flip_rates(*_series(0.8, 0.3, t), max_nfev=1)
    assert "nfev" in err.value.diagnostics


def test_fit_input_validation():
    t = np.linspace(0.1, 1, 5)
    good = (t, np.ones(5))
    with pytest.raises(ValueError, match="increasing"):
        fit_flip_rates((t[::-1], np.ones(5)), good)
    with pytest.raises(ValueError, match="3 points"):
        fit_flip_rates((t[:2], np.ones(2)), good)
    with pytest.raises(ValueError, match="equal length"):
        fit_flip_rates((t, np.ones(4)), good)
    with pytest.raises(ValueError, match="non-finite"):
        fit_flip_rates((t, np.r_[np.ones(4), np.nan]), good)


def test_fit_is_invariant_under_time_rescaling():
    t = np.linspace(0.05, 4, 50)
    a = fit_flip_rates(*_series(1.3, 0.4, t))
    b = fit_flip_rates(*_series(1.3e-3, 0.4e-3, t * 1e3))
    assert b.gamma_up == pytest.approx(a.gamma_up * 1e-3, rel=1e-8)
    assert b.gamma_down == pytest.approx(a.gamma_down * 1e-3, rel=1e-8)


def test_stationary_two_state():
    rho = stationary_state(np.array([[-2.0, 1.0], [2.0, -1.0]]))
    assert_allclose(rho, [1 / 3, 2 / 3])


def test_stationary_state_is_fixed_point():
    l = assemble_ee(0.05, np.sqrt(1 - 0.0025), RateSet(0.3, 1.7, 2.9, 0.11, gamma_t1=0.02))
    rho = stationary_state(l)
    assert_allclose(l.l @ rho, 0, atol=1e-14)
    assert rho.sum() == pytest.approx(1.0) and rho.min() >= 0


def test_exchange_zero_temperature_has_single_absorbing_state():
    l = assemble_ee(0.05, np.sqrt(1 - 0.0025), preset("fig2_T0").rates)
    assert_allclose(stationary_state(l), [0, 0, 0, 1, 0, 0])


def test_ising_zero_temperature_has_degenerate_null_space():
    l = assemble_ee(0.0, 1.0, preset("fig2_T0").rates)
    with pytest.raises(DegenerateNullSpaceError) as err:
        stationary_state(l)
    assert len(err.value.blocks) == 2


def test_cycle_map_equilibrium():
    spec = ProtocolSpec.standard(5.0, "rl", 1, Schedule.FIXED_DOWN, np.eye(6)[3])
    (rho,) = map_stationary_state(period_map(EXCHANGE, {"rl": preset("fig2_f003").rates}, spec))
    assert rho[[0, 2, 4]].sum() == pytest.approx(1.2e-2, rel=0.15)


def test_periodic_states_rotate_consistently():
    spec = ProtocolSpec.standard(5.0, "rl", 1, Schedule.ALTERNATING, np.eye(6)[3])
    maps = period_map(EXCHANGE, {"rl": preset("fig2_f003").rates}, spec)
    states = map_stationary_state(maps)
    assert_allclose(maps[1] @ states[0], states[1], atol=1e-14)
    assert_allclose(maps[0] @ states[1], states[0], atol=1e-14)


def _sweep(b0, dxz, jobs=1):
    base = SpinSystemSpec(SystemKind.ANISOTROPIC_EN, 1.0, 0.5, 4.508e6)
    return sweep_hybridization(base, b0, dxz, scenarios.GAMMA_E, scenarios.GAMMA_N_SI29, jobs=jobs)


def test_sweep_zero_dipolar_has_no_cross_weight():
    res = _sweep([1.0, 1.77, 2.5], [0.0])
    assert np.all(res.m_down == 0.0)


def test_sweep_anchor_point():
    res = _sweep([1.77], [106.2e3])
    assert res.m_down[0, 0] == pytest.approx(4e-6, rel=0.15)
    assert res.m_up[0, 0] == pytest.approx(2e-6, rel=0.15)


def test_sweep_peak_tracks_half_hyperfine():
    b0 = np.linspace(0.05, 0.6, 221)
    res = _sweep(b0, [1e4])
    peak = b0[np.nanargmax(res.m_down[:, 0])]
    assert peak == pytest.approx(4.508e6 / 2 / scenarios.GAMMA_N_SI29, abs=3 * (b0[1] - b0[0]))


def test_parallel_sweep_matches_serial():
    b0, dxz = np.linspace(0.5, 2.0, 4), np.logspace(3, 5, 3)
    a, b = _sweep(b0, dxz), _sweep(b0, dxz, jobs=2)
    assert_allclose(a.m_down, b.m_down, rtol=0, atol=0)
    assert_allclose(a.m_up, b.m_up, rtol=0, atol=0)
