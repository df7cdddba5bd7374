"""Stochastic wavefunction trajectories for twisting with m-body losses.

Unraveling: between jumps the state evolves under the no-jump drift
exp(-i chi S_z^2 t - Lambda t / 2), Lambda diagonal in the sector basis;
a jump fires when the squared norm, measured relative to the last
normalization point, first falls to a pre-drawn uniform r.  The channel
(mode, m) is then selected with probability proportional to its rate
weight in the pre-jump state, the state is projected to the smaller
sector and renormalized, and a fresh r is drawn.  At every observation
time the state is renormalized and r is rescaled by the same factor, so
the first-passage condition is preserved across the grid.
docs/unraveling.md derives the scheme and its equivalence to the master
equation.

Each trajectory uses its own counter-based stream,
Philox(key=[master_seed, trajectory_index]), which makes ensembles
bitwise reproducible for a given backend regardless of how trajectories
are distributed over workers.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from ._kernels_py import (
    M_N, M_ADAGA, M_BDAGA_RE, M_BBAA_RE, M_ABBA, M_BBBA_IM, NMOM, falling,
)
from .fock import TwoModeSector, moment_set_from_vector, xi2_from_moments, \
    MeanSpinCollapsedError

__all__ = [
    "CHANNELS", "CHANNEL_NAMES", "TrajectoryConfig", "TrajectoryResult",
    "EnsembleStats", "decay_rate", "propagate", "sample_jump_time",
    "apply_jump", "run_trajectory", "run_ensemble",
]

# channel index -> (mode, m); mode 0 is a, mode 1 is b
CHANNELS = ((0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3))
CHANNEL_NAMES = ("a1", "a2", "a3", "b1", "b2", "b3")

_MODE_CODE = {0: 0, 1: 1, "a": 0, "b": 1}


@dataclass(frozen=True)
class TrajectoryConfig:
    master_seed: int
    n_traj: int
    t_grid: np.ndarray
    root_tol: float = 1e-10
    n_workers: int = 1

    def __post_init__(self):
        grid = np.asarray(self.t_grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("t_grid must be a nonempty 1-d array")
        if np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0:
            raise ValueError("t_grid must be strictly increasing and nonnegative")
        object.__setattr__(self, "t_grid", grid)
        if self.n_traj < 1:
            raise ValueError("n_traj must be positive")


@dataclass
class TrajectoryResult:
    """Per-observation-time normalized moments of a single trajectory."""
    t_grid: np.ndarray
    moments: np.ndarray          # (T, 11), layout of _kernels_py
    jump_counts: np.ndarray      # (6,), per CHANNELS
    final_n_tot: int

    @property
    def vacuum(self):
        return self.final_n_tot == 0


@dataclass
class EnsembleStats:
    """Trajectory-averaged moments, squeezing and jackknife errors."""
    t_grid: np.ndarray
    n_traj: int
    master_seed: int
    n_init: int
    moments: np.ndarray          # (T, 11) ensemble means
    moments_se: np.ndarray       # (T, 11) standard errors of the means
    xi2: np.ndarray              # (T,), nan where the mean spin collapsed
    xi2_se: np.ndarray           # (T,), leave-one-out jackknife
    theta_min: np.ndarray        # (T,)
    collapsed: np.ndarray        # (T,) bool
    jump_counts: np.ndarray      # (6,) totals over the ensemble
    vacuum_count: int

    @property
    def n_mean(self):
        return self.moments[:, M_N]

    @property
    def sx_mean(self):
        return self.moments[:, M_BDAGA_RE]

    @property
    def lost_fraction(self):
        return 1.0 - self.moments[:, M_N] / self.n_init


def decay_rate(n_a, n_b, params):
    """Total loss rate Lambda of the Fock state |n_a, n_b>."""
    total = 0.0
    for m, g in zip((1, 2, 3), params.gammas):
        if g > 0.0:
            total += g * (falling(n_a, m) + falling(n_b, m))
    return total


def propagate(sector, params, dt):
    """No-jump drift over dt; the result is left unnormalized (its
    squared norm is the no-jump probability for the interval)."""
    hquad, lam, _ = kernels.sector_tables(sector.n_tot, *params.gammas)
    amps = kernels.propagate_segment(sector.amps, hquad, lam, params.chi, dt)
    return TwoModeSector(sector.n_tot, amps, sector.t_ref + dt)


def sample_jump_time(sector, params, r, horizon=None, root_tol=1e-10):
    """Time at which the no-jump squared norm of sector first reaches r,
    or None if it never does (within horizon, when one is given)."""
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    _, lam, _ = kernels.sector_tables(sector.n_tot, *params.gammas)
    amps = sector.amps
    if horizon is None:
        p = amps.real ** 2 + amps.imag ** 2
        s_inf = float(np.sum(p[lam == 0.0]))
        rr = r * kernels.norm_sq(amps)
        if rr <= s_inf:
            return None
        lam_max = float(np.max(lam))
        horizon = 1.0 / lam_max
        for _ in range(4000):
            if float(np.sum(p * np.exp(-lam * horizon))) < rr:
                break
            horizon *= 2.0
        tau = kernels.jump_time(amps, lam, rr, horizon, root_tol)
    else:
        tau = kernels.jump_time(amps, lam, r * kernels.norm_sq(amps),
                                horizon, root_tol)
    return None if tau < 0.0 else tau


def apply_jump(sector, mode, m):
    """Project an m-body loss from the given mode ('a' or 'b') and
    renormalize; the pre-normalization squared norm is the channel weight."""
    code = _MODE_CODE[mode]
    if not 1 <= m <= 3:
        raise ValueError("m must be 1, 2 or 3")
    if sector.n_tot < m:
        raise ValueError("sector holds fewer than m particles")
    amps = kernels.apply_jump_amps(sector.amps, code, m, sector.n_tot)
    nsq = kernels.norm_sq(amps)
    if nsq <= 0.0:
        raise ValueError("jump weight vanishes for this channel")
    return TwoModeSector(sector.n_tot - m, amps / math.sqrt(nsq), sector.t_ref)


def _single_trajectory(params, amps0, n0, t_grid, master_seed, traj_index,
                       root_tol):
    rng = np.random.Generator(np.random.Philox(key=[master_seed, traj_index]))
    amps = amps0.copy()
    n = n0
    chi = params.chi
    g1, g2, g3 = params.gammas
    hquad, lam, chan = kernels.sector_tables(n, g1, g2, g3)
    t = 0.0
    r = rng.random()
    T = t_grid.shape[0]
    mom = np.empty((T, NMOM))
    counts = np.zeros(6, dtype=np.int64)
    for i in range(T):
        t_obs = t_grid[i]
        while True:
            horizon = t_obs - t
            if horizon <= 0.0:
                break
            tau = kernels.jump_time(amps, lam, r, horizon, root_tol)
            if tau < 0.0:
                # no jump before t_obs: propagate, renormalize, rescale r
                amps = kernels.propagate_segment(amps, hquad, lam, chi, horizon)
                t = t_obs
                nsq = kernels.norm_sq(amps)
                amps = amps * (1.0 / math.sqrt(nsq))
                r = r / nsq
                break
            amps = kernels.propagate_segment(amps, hquad, lam, chi, tau)
            t = t + tau
            w = kernels.channel_weights(amps, chan)
            total = float(np.sum(w))
            target = rng.random() * total
            c = -1
            acc = 0.0
            for ci in range(6):
                wc = w[ci]
                if wc <= 0.0:
                    continue
                acc += wc
                if acc >= target:
                    c = ci
                    break
            if c < 0:
                for ci in range(5, -1, -1):
                    if w[ci] > 0.0:
                        c = ci
                        break
            mode, m = CHANNELS[c]
            amps = kernels.apply_jump_amps(amps, mode, m, n)
            n -= m
            nsq = kernels.norm_sq(amps)
            amps = amps * (1.0 / math.sqrt(nsq))
            hquad, lam, chan = kernels.sector_tables(n, g1, g2, g3)
            counts[c] += 1
            r = rng.random()
        mom[i] = kernels.linear_moments(amps, n)
    return mom, counts, n


def run_trajectory(params, sector0, cfg, traj_index=0):
    """One stochastic trajectory from the normalized initial state."""
    start = sector0.normalized()
    mom, counts, n_fin = _single_trajectory(
        params, start.amps, start.n_tot, cfg.t_grid, cfg.master_seed,
        traj_index, cfg.root_tol)
    return TrajectoryResult(cfg.t_grid, mom, counts, n_fin)


def _traj_block(params, amps0, n0, t_grid, master_seed, lo, hi, root_tol):
    T = t_grid.shape[0]
    mom = np.empty((hi - lo, T, NMOM))
    counts = np.zeros((hi - lo, 6), dtype=np.int64)
    fin = np.zeros(hi - lo, dtype=np.int64)
    for i, idx in enumerate(range(lo, hi)):
        mom[i], counts[i], fin[i] = _single_trajectory(
            params, amps0, n0, t_grid, master_seed, idx, root_tol)
    return lo, hi, mom, counts, fin


def _xi2_vector(v):
    """Vectorized reduced-form xi2 over moment vectors (..., 11); no
    collapse guard, invalid entries propagate as inf/nan."""
    adaga = v[..., M_ADAGA]
    sx = v[..., M_BDAGA_RE]
    A = 0.5 * (v[..., M_ABBA] - v[..., M_BBAA_RE])
    B = 2.0 * v[..., M_BBBA_IM]
    with np.errstate(divide="ignore", invalid="ignore"):
        return adaga * (adaga + A - np.hypot(A, B)) / (sx * sx)


def run_ensemble(params, sector0, cfg):
    """Average cfg.n_traj trajectories on cfg.t_grid.

    The squeezing parameter is evaluated on the trajectory-averaged
    moments (the unraveling reproduces density-matrix expectations
    trajectory-averaged, so nonlinear functionals must be formed after
    averaging); its standard error is the leave-one-out jackknife.
    Results are bitwise independent of n_workers: trajectory i always
    consumes the stream Philox([master_seed, i]) and the per-trajectory
    arrays are reduced in index order.
    """
    start = sector0.normalized()
    amps0, n0 = start.amps, start.n_tot
    t_grid = cfg.t_grid
    T = t_grid.shape[0]
    nt = cfg.n_traj
    mom_all = np.empty((nt, T, NMOM))
    counts_all = np.zeros((nt, 6), dtype=np.int64)
    fin_all = np.zeros(nt, dtype=np.int64)
    if cfg.n_workers <= 1:
        for idx in range(nt):
            mom_all[idx], counts_all[idx], fin_all[idx] = _single_trajectory(
                params, amps0, n0, t_grid, cfg.master_seed, idx, cfg.root_tol)
    else:
        bounds = np.linspace(0, nt, cfg.n_workers + 1).astype(int)
        jobs = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo]
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as pool:
            futures = [pool.submit(_traj_block, params, amps0, n0, t_grid,
                                   cfg.master_seed, lo, hi, cfg.root_tol)
                       for lo, hi in jobs]
            for fut in futures:
                lo, hi, mom, counts, fin = fut.result()
                mom_all[lo:hi] = mom
                counts_all[lo:hi] = counts
                fin_all[lo:hi] = fin

    totals = mom_all.sum(axis=0)
    mean = totals / nt
    if nt > 1:
        moments_se = np.std(mom_all, axis=0, ddof=1) / math.sqrt(nt)
    else:
        moments_se = np.full((T, NMOM), np.nan)

    xi2 = np.empty(T)
    theta = np.empty(T)
    collapsed = np.zeros(T, dtype=bool)
    for i in range(T):
        try:
            res = xi2_from_moments(moment_set_from_vector(mean[i]))
            xi2[i] = res.xi2
            theta[i] = res.theta_min
        except MeanSpinCollapsedError:
            xi2[i] = np.nan
            theta[i] = np.nan
            collapsed[i] = True

    if nt > 1:
        loo = (totals[None, :, :] - mom_all) / (nt - 1)
        theta_i = _xi2_vector(loo)                      # (nt, T)
        jk_mean = theta_i.mean(axis=0)
        xi2_se = np.sqrt((nt - 1) / nt
                         * np.sum((theta_i - jk_mean) ** 2, axis=0))
    else:
        xi2_se = np.full(T, np.nan)

    return EnsembleStats(
        t_grid=t_grid, n_traj=nt, master_seed=cfg.master_seed, n_init=n0,
        moments=mean, moments_se=moments_se, xi2=xi2, xi2_se=xi2_se,
        theta_min=theta, collapsed=collapsed,
        jump_counts=counts_all.sum(axis=0), vacuum_count=int(np.sum(fin_all == 0)))
