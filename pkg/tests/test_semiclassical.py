import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vibronic.model import ModelParams
from vibronic.semiclassical import (StokesFigures, chi_map, incoherent_population,
                                    incoherent_pump_rate, meanfield_dynamics,
                                    meanfield_steady_state, resonant_saturation, stokes_figures,
                                    transducer_susceptibility, transduction_rate)

pos = st.floats(1e-3, 1e3)


def test_resonant_saturation_limits():
    r = resonant_saturation(0.04, 0.0, 0.04)
    assert r.n_zpl == pytest.approx(0.5)
    assert r.population == pytest.approx(1 / 3)
    assert resonant_saturation(1e3, 0.0, 0.04).population == pytest.approx(0.5, rel=1e-6)
    assert resonant_saturation(0.0, 0.0, 0.04).population == 0.0
    r = resonant_saturation(0.1, 0.0, 0.04, p_click=0.05, eta=0.3)
    assert r.rate == pytest.approx(0.05 * 0.04 * 0.09 * r.population)


@settings(max_examples=50, deadline=None)
@given(pos, st.floats(-10, 10), pos)
def test_saturation_population_bounded_and_monotone(w, d, g0):
    a = resonant_saturation(w, d, g0).population
    b = resonant_saturation(2 * w, d, g0).population
    assert 0 < a < b <= 0.5


def test_incoherent_pump():
    assert incoherent_pump_rate(2.0, 0.0, 10.0) == pytest.approx(0.4)
    assert incoherent_pump_rate(2.0, 5.0, 10.0) == pytest.approx(0.2)
    assert incoherent_population(0.04, 0.04) == pytest.approx(0.5)
    assert incoherent_population(0.0, 0.0) == 0.0


def test_stokes_figures():
    f = stokes_figures(2.0, 0.0, 0.04, 10.0)
    assert f.cooperativity == pytest.approx(10.0)
    assert f.n_s == pytest.approx(0.04 ** 2 / 8)
    assert stokes_figures(0.0, 0.0, 0.04, 10.0).saturation_infinite
    with pytest.raises(ValueError):
        StokesFigures(-1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(pos, pos, pos)
def test_susceptibility_bounded_by_optimum(g, g0, gv):
    chi = transducer_susceptibility(stokes_figures(g, 0.0, g0, gv))
    assert chi <= g0 / (4 * gv) * (1 + 1e-9)


@settings(max_examples=50, deadline=None)
@given(pos, pos)
def test_susceptibility_optimum_at_unit_cooperativity(g0, gv):
    g = np.sqrt(g0 * gv)
    chi = transducer_susceptibility(stokes_figures(g, 0.0, g0, gv))
    assert chi == pytest.approx(g0 / (4 * gv), rel=1e-9)


def test_chi_map_matches_pointwise():
    gs = np.array([0.5, 1.0, 10.0])
    gvs = np.array([1.0, 100.0])
    chi, coop = chi_map(gs, gvs, 0.0, 0.04)
    assert chi.shape == (2, 3)
    for i, gv in enumerate(gvs):
        for j, g in enumerate(gs):
            f = stokes_figures(g * 0.04, 0.0, 0.04, gv * 0.04)
            assert chi[i, j] == pytest.approx(transducer_susceptibility(f))
            assert coop[i, j] == pytest.approx(f.cooperativity)
    assert transduction_rate(0.01, 0.2, 0.04) == pytest.approx(0.01)


def test_meanfield_without_coupling_is_driven_oscillator():
    p = ModelParams(omega_thz_rabi=1.0, gamma_v=10.0)
    s = meanfield_steady_state(p)
    assert s.b == pytest.approx(-0.1j)
    assert s.population == 0.0
    with pytest.raises(ValueError):
        meanfield_steady_state(ModelParams(omega_zpl_rabi=0.1))


@pytest.mark.parametrize("kw", [
    dict(g_s=1.0, omega_thz_rabi=0.1),
    dict(g_s=2.0, omega_thz_rabi=0.3, delta_v=1.0, delta0=0.02),
    dict(g_s=0.5, omega_zpl_rabi=0.01, omega_thz_rabi=0.05),
])
def test_meanfield_steady_state_is_a_fixed_point_of_the_dynamics(kw):
    p = ModelParams(**kw)
    s = meanfield_steady_state(p)
    assert -0.5 <= s.s_z <= 0.5
    t, b, sig, sz = meanfield_dynamics(p, [0.0, 5.0], b0=s.b, sigma0=s.sigma, s_z0=s.s_z)
    assert abs(b[-1] - s.b) < 1e-6 * max(1.0, abs(s.b))
    assert abs(sz[-1] - s.s_z) < 1e-6


def test_meanfield_dynamics_relaxes_to_low_branch():
    p = ModelParams(g_s=1.0, omega_thz_rabi=0.1)
    s = meanfield_steady_state(p)
    _, b, _, sz = meanfield_dynamics(p, np.linspace(0, 400, 5))
    assert abs(b[-1] - s.b) < 1e-5
    assert sz[-1] == pytest.approx(s.s_z, abs=1e-6)


def test_branches_are_ordered():
    p = ModelParams(g_s=1.0, omega_thz_rabi=0.1)
    low = meanfield_steady_state(p, "low")
    high = meanfield_steady_state(p, "high")
    assert abs(low.b_ss) ** 2 <= abs(high.b_ss) ** 2 + 1e-15
    assert list(low.roots) == sorted(low.roots)
