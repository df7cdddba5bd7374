"""Dense sector-block master-equation integrator, the small-N oracle.

With a number-state start, the twisting Hamiltonian and the m-body loss
dissipators never create coherence between different total numbers, so
the density matrix stays block diagonal over sectors n = 0..n_max and is
stored as one (n + 1) x (n + 1) Hermitian block per sector (indices are
n_a, as everywhere else).  Within a block

    d rho_n / dt = (-i (h_i - h_j) - (Lambda_i + Lambda_j) / 2) rho_n
                   + feeds from sector n + m for each active channel,

where h_k = chi (2k - n)^2 / 4 and Lambda is the diagonal loss rate; the
feed of an m-body jump from mode a is

    gamma_m g_i g_j rho_{n+m}[i+m, j+m],  g_i = sqrt((i+m)(i+m-1)...(i+1)),

and from mode b the same with weights in n_b and no index shift.  This
is brute force (dimension grows as n_max^2) and deliberately so: it is
the independent check for the trajectory solver and the closed forms.
docs/unraveling.md derives the trajectory scheme this oracle validates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._kernels_py import (
    M_N, M_ADAGA, M_BDAGA_RE, M_BDAGA_IM, M_ABBA,
    M_BBAA_RE, M_BBAA_IM, M_BBBA_RE, M_BBBA_IM, M_SZ, M_SZ2, NMOM, falling,
)
from .fock import moment_set_from_vector, phase_state

__all__ = ["MAX_TOTAL", "DensityMatrix", "integrate_master", "var_sz_check"]

# the flat state at n_max = 30 already has 5456 complex entries; this is
# an oracle for desk-scale N, not a production path
MAX_TOTAL = 30


@dataclass
class DensityMatrix:
    """Sector-blocked two-mode density matrix.

    blocks[n] is the (n + 1) x (n + 1) matrix <i, n-i| rho |j, n-j>;
    blocks run from n = 0 to n_max inclusive.
    """
    blocks: list
    t: float = 0.0

    @property
    def n_max(self):
        return len(self.blocks) - 1

    @classmethod
    def from_sector(cls, sector):
        if sector.n_tot > MAX_TOTAL:
            raise ValueError("oracle is capped at n_tot = %d" % MAX_TOTAL)
        nsq = sector.norm_sq()
        if nsq <= 0.0:
            raise ValueError("zero state")
        blocks = [np.zeros((n + 1, n + 1), dtype=np.complex128)
                  for n in range(sector.n_tot + 1)]
        amps = sector.amps / math.sqrt(nsq)
        blocks[sector.n_tot] = np.outer(amps, np.conj(amps))
        return cls(blocks=blocks, t=sector.t_ref)

    def trace(self):
        return float(sum(np.trace(b).real for b in self.blocks))

    def herm_defect(self):
        return max(float(np.max(np.abs(b - b.conj().T))) if b.size else 0.0
                   for b in self.blocks)

    def min_eigval(self):
        return min(float(np.min(np.linalg.eigvalsh(b))) for b in self.blocks)

    def to_dense(self):
        """Full matrix over the graded basis: sectors in ascending n,
        n_a ascending within each sector; dimension (n_max+1)(n_max+2)/2."""
        dim = (self.n_max + 1) * (self.n_max + 2) // 2
        out = np.zeros((dim, dim), dtype=np.complex128)
        off = 0
        for n, b in enumerate(self.blocks):
            out[off:off + n + 1, off:off + n + 1] = b
            off += n + 1
        return out

    def linear_moments(self):
        """Moment vector in the _kernels_py layout (raw sums; divide by
        the trace for expectation values of a normalized state)."""
        out = np.zeros(NMOM)
        bdaga = 0.0j
        bbba = 0.0j
        bbaa = 0.0j
        for n, b in enumerate(self.blocks):
            k = np.arange(n + 1, dtype=np.float64)
            pop = np.real(np.diag(b))
            szk = k - 0.5 * n
            out[M_N] += n * float(np.sum(pop))
            out[M_ADAGA] += float(np.sum(k * pop))
            out[M_ABBA] += float(np.sum(k * (n - k) * pop))
            out[M_SZ] += float(np.sum(szk * pop))
            out[M_SZ2] += float(np.sum(szk * szk * pop))
            if n >= 1:
                kk = k[1:]
                w1 = np.sqrt(kk * (n - kk + 1.0))
                d1 = np.array([b[i, i - 1] for i in range(1, n + 1)])
                bdaga += np.sum(w1 * d1)
                bbba += np.sum((n - kk) * w1 * d1)
            if n >= 2:
                kk2 = k[2:]
                w2 = np.sqrt(kk2 * (kk2 - 1.0) * (n - kk2 + 1.0) * (n - kk2 + 2.0))
                d2 = np.array([b[i, i - 2] for i in range(2, n + 1)])
                bbaa += np.sum(w2 * d2)
        out[M_BDAGA_RE] = bdaga.real
        out[M_BDAGA_IM] = bdaga.imag
        out[M_BBAA_RE] = bbaa.real
        out[M_BBAA_IM] = bbaa.imag
        out[M_BBBA_RE] = bbba.real
        out[M_BBBA_IM] = bbba.imag
        return out

    def moments(self):
        v = self.linear_moments()
        tr = self.trace()
        return moment_set_from_vector(v / tr)


def _offsets(n_max):
    off = np.zeros(n_max + 2, dtype=np.int64)
    for n in range(n_max + 1):
        off[n + 1] = off[n] + (n + 1) * (n + 1)
    return off


def integrate_master(params, t_grid, rho0=None):
    """Integrate the master equation, returning one DensityMatrix per
    requested time (each carries its MomentSet via .moments()).

    Starts from the phase state on params.n_init unless rho0 is given.
    Schroedinger picture throughout; jump operators are the bare mode
    powers a^m, b^m times sqrt(gamma_m).  Uses an explicit high-order
    Runge-Kutta with rtol 1e-10, with the step capped well below the
    fastest loss time so narrow feeds are never skipped.
    """
    if rho0 is None:
        rho0 = DensityMatrix.from_sector(phase_state(params.n_init))
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be a nonempty increasing 1-d array")
    n_max = rho0.n_max
    if n_max > MAX_TOTAL:
        raise ValueError("oracle is capped at n_tot = %d" % MAX_TOTAL)
    chi = params.chi
    gammas = params.gammas
    off = _offsets(n_max)
    dim = int(off[-1])

    # per-sector drift weights W_n[i, j] = -i(h_i - h_j) - (L_i + L_j)/2
    drift = []
    lam_peak = 0.0
    for n in range(n_max + 1):
        k = np.arange(n + 1, dtype=np.float64)
        h = chi * (2.0 * k - n) ** 2 / 4.0
        lam = np.zeros(n + 1)
        for m, g in zip((1, 2, 3), gammas):
            if g > 0.0:
                for i in range(n + 1):
                    lam[i] += g * (falling(i, m) + falling(n - i, m))
        lam_peak = max(lam_peak, float(np.max(lam)) if lam.size else 0.0)
        drift.append(-1j * (h[:, None] - h[None, :])
                     - 0.5 * (lam[:, None] + lam[None, :]))

    # feed weights: outer(g, g) per (target sector, m, mode)
    feed_a = {}
    feed_b = {}
    for m, g in zip((1, 2, 3), gammas):
        if g <= 0.0:
            continue
        for n in range(n_max + 1 - m):
            s = n + m
            i = np.arange(n + 1, dtype=np.float64)
            ga = np.sqrt(g * np.array([falling(ii + m, m) for ii in i]))
            gb = np.sqrt(g * np.array([falling(s - ii, m) for ii in i]))
            feed_a[(n, m)] = np.outer(ga, ga)
            feed_b[(n, m)] = np.outer(gb, gb)

    def unpack(y):
        c = y.view(np.complex128)
        return [c[off[n]:off[n + 1]].reshape(n + 1, n + 1)
                for n in range(n_max + 1)]

    def rhs(t, y):
        blocks = unpack(y)
        dy = np.empty(dim, dtype=np.complex128)
        out = [dy[off[n]:off[n + 1]].reshape(n + 1, n + 1)
               for n in range(n_max + 1)]
        for n in range(n_max + 1):
            acc = drift[n] * blocks[n]
            for m in (1, 2, 3):
                key = (n, m)
                if key in feed_a:
                    src = blocks[n + m]
                    acc = acc + feed_a[key] * src[m:, m:]
                    acc = acc + feed_b[key] * src[:n + 1, :n + 1]
            out[n][:, :] = acc
        return dy.view(np.float64)

    y0 = np.zeros(dim, dtype=np.complex128)
    for n in range(n_max + 1):
        y0[off[n]:off[n + 1]] = rho0.blocks[n].reshape(-1)

    max_step = 0.1 / lam_peak if lam_peak > 0.0 else np.inf
    sol = solve_ivp(rhs, (float(rho0.t), float(t_grid[-1])), y0.view(np.float64),
                    method="DOP853", t_eval=t_grid, rtol=1e-10, atol=1e-13,
                    max_step=max_step)
    if not sol.success:
        raise RuntimeError("master-equation integration failed: %s" % sol.message)

    result = []
    for col, t in zip(sol.y.T, sol.t):
        c = np.ascontiguousarray(col).view(np.complex128)
        blocks = [c[off[n]:off[n + 1]].reshape(n + 1, n + 1).copy()
                  for n in range(n_max + 1)]
        result.append(DensityMatrix(blocks=blocks, t=float(t)))
    return result


def var_sz_check(params, t_grid, rho0=None):
    """Worst |Var S_z - <N>/4| over the grid.

    The identity holds exactly under twisting with one-body losses on a
    binomial start (jumps map phase states to phase states) and only
    approximately for two- and three-body losses; this measures the
    actual deviation rather than assuming it.
    """
    worst = 0.0
    for rho in integrate_master(params, t_grid, rho0=rho0):
        v = rho.linear_moments()
        tr = rho.trace()
        var = v[M_SZ2] / tr - (v[M_SZ] / tr) ** 2
        worst = max(worst, abs(var - 0.25 * v[M_N] / tr))
    return worst
