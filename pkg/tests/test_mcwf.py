"""Trajectory engine: exact single-step identities, determinism, and
ensemble agreement with the master-equation oracle."""

import math

import numpy as np
import pytest

from spinsqz import (
    ModelParams, TrajectoryConfig, TwoModeSector, apply_jump, decay_rate,
    integrate_master, phase_state, propagate, run_ensemble, run_trajectory,
    sample_jump_time,
)
from spinsqz._kernels_py import M_BDAGA_IM, M_N, M_SZ

SEED = 20260816


def overlap(u, v):
    return abs(np.vdot(u, v)) / math.sqrt(
        float(np.vdot(u, u).real) * float(np.vdot(v, v).real))


# stepwise pieces

def test_decay_rate_examples():
    assert decay_rate(0, 0, ModelParams(n_init=0, chi=1.0, gamma1=0.7)) == 0.0
    assert decay_rate(1, 0, ModelParams(n_init=1, chi=1.0, gamma1=0.7)) == \
        pytest.approx(0.7)
    # three particles allow a three-body event at rate gamma3 * 3!
    assert decay_rate(3, 2, ModelParams(n_init=5, chi=1.0, gamma3=0.1)) == \
        pytest.approx(0.6)


def test_propagate_advances_time_and_damps_norm():
    pars = ModelParams(n_init=6, chi=0.9, gamma1=0.3)
    sec = phase_state(6)
    out = propagate(sec, pars, 0.2)
    assert out.t_ref == pytest.approx(0.2)
    # uniform one-body rate: no-jump norm is exactly e^{-n gamma t}
    assert out.norm_sq() == pytest.approx(math.exp(-6 * 0.3 * 0.2), rel=1e-12)


def test_propagate_lossless_is_pure_twist():
    n, chi, t = 7, 1.1, 0.4
    out = propagate(phase_state(n, 0.2), ModelParams(n_init=n, chi=chi), t)
    k = np.arange(n + 1)
    ref = phase_state(n, 0.2).amps * np.exp(-0.25j * chi * t * (2 * k - n) ** 2)
    assert np.allclose(out.amps, ref, atol=1e-12)
    assert out.norm_sq() == pytest.approx(1.0, rel=1e-12)


def test_two_particle_pi_revival():
    # chi t = pi turns the equator state into its pi/2-rotated twin
    out = propagate(phase_state(2), ModelParams(n_init=2, chi=1.0), math.pi)
    assert overlap(out.amps, phase_state(2, math.pi / 2).amps) == \
        pytest.approx(1.0, abs=1e-12)


def test_sample_jump_time_constant_rate():
    # one-body loss rate is n gamma in the whole sector, so the first
    # passage time is the textbook exponential quantile
    pars = ModelParams(n_init=4, chi=1.3, gamma1=0.3)
    tau = sample_jump_time(phase_state(4), pars, r=0.37)
    assert tau == pytest.approx(-math.log(0.37) / 1.2, rel=1e-9)


def test_sample_jump_time_unreachable_targets():
    # |1,1> sees no two-body events at all
    pars = ModelParams(n_init=2, chi=1.0, gamma2=0.25)
    inert = TwoModeSector(2, np.array([0.0, 1.0, 0.0]))
    assert sample_jump_time(inert, pars, r=0.999) is None
    # half the weight is inert, so targets below 1/2 are never reached
    mixed = TwoModeSector(2, np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0))
    assert sample_jump_time(mixed, pars, r=0.4) is None
    tau = sample_jump_time(mixed, pars, r=0.6)
    # 0.5 + 0.5 exp(-2 gamma2 tau) = 0.6
    assert tau == pytest.approx(math.log(5.0) / 0.5, rel=1e-6)


def test_sample_jump_time_validates_r():
    pars = ModelParams(n_init=3, chi=1.0, gamma1=0.2)
    for bad in (0.0, -0.5, 1.0001):
        with pytest.raises(ValueError, match="r must lie"):
            sample_jump_time(phase_state(3), pars, r=bad)
    assert sample_jump_time(phase_state(3), pars, r=1.0) == 0.0


def test_apply_jump_examples():
    two_a = TwoModeSector(2, np.array([0.0, 0.0, 1.0]))   # |n_a=2, n_b=0>
    out = apply_jump(two_a, "a", 2)
    assert out.n_tot == 0
    assert np.allclose(out.amps, [1.0])
    with pytest.raises(ValueError, match="fewer than m"):
        apply_jump(out, "a", 1)
    with pytest.raises(ValueError, match="weight vanishes"):
        apply_jump(two_a, "b", 1)
    with pytest.raises(ValueError, match="m must be"):
        apply_jump(two_a, "a", 4)


def test_one_body_jump_maps_phase_state_to_phase_state():
    for mode in ("a", "b"):
        out = apply_jump(phase_state(6, 0.35), mode, 1)
        assert out.n_tot == 5
        assert overlap(out.amps, phase_state(5, 0.35).amps) == \
            pytest.approx(1.0, abs=1e-12)


# trajectories and ensembles

def test_trajectory_bookkeeping_and_determinism():
    pars = ModelParams(n_init=9, chi=1.0, gamma1=0.5, gamma2=0.05, gamma3=0.01)
    cfg = TrajectoryConfig(master_seed=SEED, n_traj=1,
                           t_grid=np.array([0.5, 2.0, 6.0]))
    first = run_trajectory(pars, phase_state(9), cfg, traj_index=3)
    again = run_trajectory(pars, phase_state(9), cfg, traj_index=3)
    assert np.array_equal(first.moments, again.moments)
    assert np.array_equal(first.jump_counts, again.jump_counts)
    # particles removed by jumps account exactly for the sector descent
    removed = int(np.dot(first.jump_counts, (1, 2, 3, 1, 2, 3)))
    assert removed == 9 - first.final_n_tot


def test_config_validation():
    good = np.array([0.1, 0.2])
    with pytest.raises(ValueError, match="increasing"):
        TrajectoryConfig(master_seed=1, n_traj=4, t_grid=np.array([0.2, 0.1]))
    with pytest.raises(ValueError, match="increasing"):
        TrajectoryConfig(master_seed=1, n_traj=4, t_grid=np.array([-0.1, 0.2]))
    with pytest.raises(ValueError, match="nonempty"):
        TrajectoryConfig(master_seed=1, n_traj=4, t_grid=np.array([]))
    with pytest.raises(ValueError, match="n_traj"):
        TrajectoryConfig(master_seed=1, n_traj=0, t_grid=good)


def test_ensemble_starts_unsqueezed():
    pars = ModelParams(n_init=10, chi=1.0, gamma1=0.02)
    cfg = TrajectoryConfig(master_seed=SEED, n_traj=64,
                           t_grid=np.array([0.0, 0.1]))
    stats = run_ensemble(pars, phase_state(10), cfg)
    assert stats.xi2[0] == pytest.approx(1.0, abs=1e-12)
    assert stats.xi2_se[0] == 0.0
    assert stats.lost_fraction[0] == 0.0


def test_ensemble_matches_master_oracle():
    pars = ModelParams(n_init=8, chi=1.0,
                       gamma1=0.02, gamma2=0.002, gamma3=0.0005)
    grid = np.array([0.05, 0.15, 0.3])
    ref = np.array([r.linear_moments() / r.trace()
                    for r in integrate_master(pars, grid)])
    cfg = TrajectoryConfig(master_seed=SEED, n_traj=2000, t_grid=grid)
    stats = run_ensemble(pars, phase_state(8), cfg)
    z = np.abs(stats.moments - ref) \
        / np.where(stats.moments_se > 0.0, stats.moments_se, np.inf)
    assert np.all(z <= 3.0)


def test_ensemble_mode_symmetry():
    pars = ModelParams(n_init=8, chi=1.0,
                       gamma1=0.02, gamma2=0.002, gamma3=0.0005)
    cfg = TrajectoryConfig(master_seed=SEED, n_traj=2000,
                           t_grid=np.array([0.05, 0.15, 0.3]))
    stats = run_ensemble(pars, phase_state(8), cfg)
    for slot in (M_SZ, M_BDAGA_IM):
        assert np.all(np.abs(stats.moments[:, slot])
                      <= 3.0 * stats.moments_se[:, slot])


def test_ensemble_bitwise_independent_of_workers():
    pars = ModelParams(n_init=8, chi=1.0, gamma1=0.05, gamma2=0.005)
    grid = np.array([0.1, 0.4])
    runs = [run_ensemble(pars, phase_state(8),
                         TrajectoryConfig(master_seed=SEED, n_traj=30,
                                          t_grid=grid, n_workers=w))
            for w in (1, 3)]
    assert np.array_equal(runs[0].moments, runs[1].moments)
    assert np.array_equal(runs[0].moments_se, runs[1].moments_se)
    assert np.array_equal(runs[0].xi2, runs[1].xi2)
    assert np.array_equal(runs[0].xi2_se, runs[1].xi2_se)
    assert np.array_equal(runs[0].jump_counts, runs[1].jump_counts)
    assert runs[0].vacuum_count == runs[1].vacuum_count


def test_jackknife_se_shrinks_with_ensemble_size():
    pars = ModelParams(n_init=8, chi=1.0,
                       gamma1=0.02, gamma2=0.002, gamma3=0.0005)
    grid = np.array([0.05, 0.15, 0.3])
    small = run_ensemble(pars, phase_state(8),
                         TrajectoryConfig(master_seed=7, n_traj=400,
                                          t_grid=grid))
    big = run_ensemble(pars, phase_state(8),
                       TrajectoryConfig(master_seed=7, n_traj=1600,
                                        t_grid=grid))
    ratio = small.xi2_se / big.xi2_se
    assert np.all(ratio > 1.4) and np.all(ratio < 2.7)


def test_vacuum_is_absorbing():
    pars = ModelParams(n_init=2, chi=1.0, gamma1=5.0)
    cfg = TrajectoryConfig(master_seed=SEED, n_traj=100,
                           t_grid=np.array([0.05, 8.0]))
    stats = run_ensemble(pars, phase_state(2), cfg)
    assert stats.vacuum_count == 100
    assert stats.moments[-1, M_N] == 0.0
    assert bool(stats.collapsed[-1])
    assert math.isnan(stats.xi2[-1])
