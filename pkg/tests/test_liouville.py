import numpy as np
import pytest
import scipy.sparse as sp

from vibronic import fock
from vibronic.errors import DimensionError
from vibronic.liouville import (apply_liouvillian, build_liouvillian, population_leak, propagate,
                                steady_state, trace_distance, unvec, vec)
from vibronic.model import DriveSelection, JumpChannel, ModelParams, build_hamiltonian, dissipators
from vibronic.semiclassical import resonant_saturation

TWO_PI = 2 * np.pi


def system(p, drives):
    return build_liouvillian(build_hamiltonian(p, drives), dissipators(p))


def random_dm(d, rng):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_vec_is_column_stacking():
    rho = np.arange(9).reshape(3, 3)
    assert list(vec(rho)[:3]) == [0, 3, 6]
    np.testing.assert_array_equal(unvec(vec(rho)), rho)


def test_vectorization_identity(rng):
    a, b, r = (rng.normal(size=(4, 4)) for _ in range(3))
    np.testing.assert_allclose(vec(a @ r @ b), np.kron(b.T, a) @ vec(r), atol=1e-12)


def test_trace_and_hermiticity_preserved(rng):
    p = ModelParams(delta0=0.4, delta_v=-0.3, g_s=2.0, g_as=1.0, omega_zpl_rabi=0.5,
                    gamma_phi_opt=0.1, gamma_phi_v=0.2, n_cutoff=5)
    lv = system(p, DriveSelection(zpl=True, stokes=True, anti_stokes=True))
    rho = random_dm(10, rng)
    drho = apply_liouvillian(lv, rho)
    assert abs(np.trace(drho)) < 1e-10
    np.testing.assert_allclose(drho, drho.conj().T, atol=1e-10)
    # trace functional annihilated for every input: column sums of the diagonal rows
    d = 10
    rows = lv.tocsr()[np.arange(d) * (d + 1)]
    assert np.abs(np.asarray(rows.sum(axis=0))).max() < 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        build_liouvillian(sp.identity(4, format="csr"), [JumpChannel(sp.identity(3, format="csr"), 1.0)])


def test_spontaneous_decay_matches_exponential():
    p = ModelParams(n_cutoff=2)
    lv = system(p, DriveSelection())
    rho0 = fock.ket_to_dm(fock.basis_state(p.spec, 1, 0))
    t = np.linspace(0, 30, 7)
    out = propagate(lv, rho0, t)
    ne = fock.excited_projector(p.spec)
    pops = [fock.expect(ne, r).real for r in out]
    np.testing.assert_allclose(pops, np.exp(-TWO_PI * 0.04 * t), atol=1e-7)


def test_undriven_steady_state_is_ground_state():
    p = ModelParams(n_cutoff=6)
    ss = steady_state(system(p, DriveSelection()))
    ref = fock.ket_to_dm(fock.basis_state(p.spec, 0, 0))
    assert trace_distance(ss.rho, ref) < 1e-10


def test_stokes_only_drive_leaves_ground_state_dark():
    p = ModelParams(g_s=5.0, n_cutoff=8)
    ss = steady_state(system(p, DriveSelection(stokes=True)))
    assert ss.expect(fock.excited_projector(p.spec)) < 1e-12
    assert ss.residual < 1e-8


@pytest.mark.parametrize("rabi,detuning", [(0.01, 0.0), (0.05, 0.02), (0.3, -0.1)])
def test_zpl_drive_matches_two_level_saturation(rabi, detuning):
    p = ModelParams(omega_zpl_rabi=rabi, delta0=detuning, n_cutoff=2)
    ss = steady_state(system(p, DriveSelection(zpl=True)))
    pop = ss.expect(fock.excited_projector(p.spec))
    assert pop == pytest.approx(resonant_saturation(rabi, detuning, 0.04).population, rel=1e-8)


def test_propagation_relaxes_to_steady_state():
    p = ModelParams(g_s=2.0, omega_zpl_rabi=0.05, n_cutoff=6)
    lv = system(p, DriveSelection.jc_zpl())
    ss = steady_state(lv)
    rho0 = fock.ket_to_dm(fock.basis_state(p.spec, 0, 0))
    t_end = 20 / 0.04
    out = propagate(lv, rho0, [0.0, t_end])
    assert trace_distance(out[-1], ss.rho) < 1e-4


def test_iterative_and_direct_agree():
    p = ModelParams(g_s=3.0, g_as=1.0, omega_zpl_rabi=0.2, delta_v=1.0, n_cutoff=6)
    lv = system(p, DriveSelection(zpl=True, stokes=True, anti_stokes=True))
    a = steady_state(lv, method="direct")
    b = steady_state(lv, method="iterative")
    assert trace_distance(a.rho, b.rho) < 1e-7


def test_population_leak_detects_truncation():
    spec = fock.HilbertSpec(20)
    amps = fock._coherent_amplitudes(20, np.sqrt(5.0))
    psi = np.concatenate([amps, np.zeros(20)])
    rho = fock.ket_to_dm(psi / np.linalg.norm(psi))
    assert population_leak(rho, spec) > 1e-6
    small = fock.ket_to_dm(fock.coherent_state(spec, 1.0))
    assert population_leak(small, spec) < 1e-6


def test_propagate_rejects_bad_grid():
    p = ModelParams(n_cutoff=2)
    lv = system(p, DriveSelection())
    rho0 = np.eye(4) / 4
    with pytest.raises(ValueError):
        propagate(lv, rho0, [1.0, 0.5])
