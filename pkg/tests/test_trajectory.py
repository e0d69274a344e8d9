import numpy as np
import pytest

from vibronic import fock
from vibronic.errors import HistogramError
from vibronic.liouville import build_liouvillian, propagate
from vibronic.model import DriveSelection, ModelParams, build_hamiltonian, dissipators
from vibronic.trajectory import (EnsembleHistogram, LowEnergyStart, TrajectoryConfig,
                                 ensemble_average, histogram_at, projected_state,
                                 run_trajectories, sign_flips, trajectory_rng)

TWO_PI = 2 * np.pi


def decay_setup(gamma0=1.0):
    p = ModelParams(gamma0=gamma0, n_cutoff=2)
    return p, build_hamiltonian(p, DriveSelection()), dissipators(p)


def test_config_validation_and_grid():
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=0, t_final=1, dt_max=0.1)
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=1, t_final=1, dt_max=0)
    cfg = TrajectoryConfig(n_traj=1, t_final=1.0, dt_max=0.03, record_stride=7)
    assert cfg.times[-1] == pytest.approx(1.0)
    assert cfg.dt <= 0.03


def test_non_hermitian_observable_rejected():
    spec = fock.HilbertSpec(2)
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=1, t_final=1, dt_max=0.1, observables={"s": fock.sigma_minus(spec)})


def test_rng_streams_are_independent_and_reproducible():
    a = trajectory_rng(3, 0).random(4)
    assert np.array_equal(a, trajectory_rng(3, 0).random(4))
    assert not np.array_equal(a, trajectory_rng(3, 1).random(4))


def test_ensemble_decay_tracks_exponential():
    p, h, ch = decay_setup()
    spec = p.spec
    n = 400
    cfg = TrajectoryConfig(n_traj=n, t_final=0.5, dt_max=0.01, seed=7, record_stride=10,
                           observables={"ne": fock.excited_projector(spec)})
    recs = run_trajectories(h, ch, fock.basis_state(spec, 1, 0), cfg)
    t, mean, _ = ensemble_average(recs, "ne")
    ref = np.exp(-TWO_PI * t)
    assert np.all(np.abs(mean - ref) <= 3 / np.sqrt(n))
    # every trajectory jumps at most once and ends in |g>
    assert all(len(r.jump_times) <= 1 for r in recs)


def test_ensemble_matches_master_equation():
    p = ModelParams(gamma0=0.5, omega_zpl_rabi=0.6, g_s=1.0, gamma_v=2.0, n_cutoff=4)
    h = build_hamiltonian(p, DriveSelection.jc_zpl())
    ch = dissipators(p)
    spec = p.spec
    ne = fock.excited_projector(spec)
    n = 300
    cfg = TrajectoryConfig(n_traj=n, t_final=2.0, dt_max=0.005, seed=11, record_stride=50,
                           observables={"ne": ne})
    psi0 = fock.basis_state(spec, 0, 0)
    recs = run_trajectories(h, ch, psi0, cfg)
    t, mean, err = ensemble_average(recs, "ne")
    rhos = propagate(build_liouvillian(h, ch), fock.ket_to_dm(psi0), t)
    ref = np.array([fock.expect(ne, r).real for r in rhos])
    assert np.all(np.abs(mean - ref) <= 4 * err + 1e-3)


def test_stderr_scales_with_ensemble_size():
    p, h, ch = decay_setup()
    spec = p.spec
    obs = {"ne": fock.excited_projector(spec)}
    psi0 = fock.basis_state(spec, 1, 0)
    errs = []
    for n in (100, 400):
        cfg = TrajectoryConfig(n_traj=n, t_final=0.2, dt_max=0.01, seed=5, observables=obs)
        errs.append(ensemble_average(run_trajectories(h, ch, psi0, cfg), "ne")[2][-1])
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.25)


def test_single_trajectory_has_zero_stderr():
    p, h, ch = decay_setup()
    cfg = TrajectoryConfig(n_traj=1, t_final=0.1, dt_max=0.01,
                           observables={"ne": fock.excited_projector(p.spec)})
    _, _, err = ensemble_average(run_trajectories(h, ch, fock.basis_state(p.spec, 1, 0), cfg), "ne")
    assert np.all(err == 0)


def test_results_independent_of_worker_count():
    p = ModelParams(g_s=2.0, g_as=2.0, gamma_v=1.0, gamma0=0.5, n_cutoff=5)
    h = build_hamiltonian(p, DriveSelection.generalized_rabi())
    ch = dissipators(p)
    cfg = TrajectoryConfig(n_traj=6, t_final=0.5, dt_max=0.01, seed=2,
                           observables={"nb": fock.vib_number(p.spec)})
    start = LowEnergyStart(p.spec)
    a = run_trajectories(h, ch, start, cfg, workers=1)
    b = run_trajectories(h, ch, start, cfg, workers=2)
    for ra, rb in zip(a, b):
        assert ra.index == rb.index
        np.testing.assert_array_equal(ra.traces, rb.traces)
        np.testing.assert_array_equal(ra.jump_times, rb.jump_times)


def test_initial_state_checks():
    p, h, ch = decay_setup()
    cfg = TrajectoryConfig(n_traj=1, t_final=0.1, dt_max=0.01)
    with pytest.raises(ValueError):
        run_trajectories(h, ch, np.array([1.0, 1.0, 0, 0]), cfg)


def test_histogram_of_identical_values_has_one_bin():
    p, h, ch = decay_setup()
    cfg = TrajectoryConfig(n_traj=5, t_final=0.1, dt_max=0.01,
                           observables={"nb": fock.vib_number(p.spec)})
    recs = run_trajectories(h, ch, fock.basis_state(p.spec, 0, 0), cfg)
    hist = histogram_at(recs, "nb", 0.1, bins=10)
    assert hist.counts.sum() == 5
    assert np.count_nonzero(hist.counts) == 1
    assert not hist.is_bimodal()
    with pytest.raises(HistogramError):
        histogram_at([], "nb", 0.1)
    with pytest.raises(ValueError):
        histogram_at(recs, "nb", 5.0)


def test_bimodality_detection():
    two = EnsembleHistogram(np.linspace(0, 1, 11), np.array([0, 9, 12, 3, 0, 0, 2, 10, 8, 1]), "x", 0)
    one = EnsembleHistogram(np.linspace(0, 1, 11), np.array([1, 3, 7, 12, 9, 8, 4, 2, 1, 0]), "x", 0)
    noisy = EnsembleHistogram(np.linspace(0, 1, 11), np.array([1, 4, 9, 20, 18, 9, 3, 0, 2, 0]), "x", 0)
    assert two.is_bimodal() and not one.is_bimodal() and not noisy.is_bimodal()


def test_projected_state():
    spec = fock.HilbertSpec(4)
    assert not projected_state(fock.basis_state(spec, 0, 1), spec).valid
    psi = (fock.basis_state(spec, 0, 0) + fock.basis_state(spec, 1, 2)) / np.sqrt(2)
    ps = projected_state(psi, spec)
    assert ps.weight == pytest.approx(0.5)
    assert np.trace(ps.normalized).real == pytest.approx(1.0)
    assert np.trace(ps.unnormalized).real == pytest.approx(0.5)


def test_sign_flips():
    t = np.arange(6.0)
    np.testing.assert_array_equal(sign_flips(t, [1, 1, -1, -1, 1, 1]), [2.0, 4.0])
