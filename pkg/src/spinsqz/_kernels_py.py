"""Reference numpy implementation of the sector kernels.

A state with n_tot particles shared by two bosonic modes is stored as a
complex vector amps[k], k = n_a = 0..n_tot (so n_b = n_tot - k).  The
functions here are the inner loops of the trajectory solver: drift
propagation, first-passage jump times, channel selection weights, jump
application and moment accumulation.  _kernels_cy mirrors this module
one to one in Cython; backend.py selects the implementation at import
time, so both must keep identical signatures and conventions.

Moment vector layout (raw sums over the given amplitudes, nothing is
normalized here):

    [0]  <N>           = n_tot * sum |amps|^2
    [1]  <a^ a>          mean occupation of mode a
    [2]  Re <b^ a>       mean-spin overlap, S_x = Re, S_y = -Im
    [3]  Im <b^ a>
    [4]  <b^ a^ a b>     cross occupation n_a n_b
    [5]  Re <b^ b^ a a>  two-particle coherence
    [6]  Im <b^ b^ a a>
    [7]  Re <b^ b^ b a>  one-particle coherence weighted by n_b
    [8]  Im <b^ b^ b a>
    [9]  <S_z>
    [10] <S_z^2>

(a^ denotes the creation operator.)
"""

import numpy as np

M_N = 0
M_ADAGA = 1
M_BDAGA_RE = 2
M_BDAGA_IM = 3
M_ABBA = 4
M_BBAA_RE = 5
M_BBAA_IM = 6
M_BBBA_RE = 7
M_BBBA_IM = 8
M_SZ = 9
M_SZ2 = 10
NMOM = 11

__all__ = [
    "M_N", "M_ADAGA", "M_BDAGA_RE", "M_BDAGA_IM", "M_ABBA",
    "M_BBAA_RE", "M_BBAA_IM", "M_BBBA_RE", "M_BBBA_IM", "M_SZ", "M_SZ2",
    "NMOM",
    "falling", "sector_tables", "propagate_segment", "norm_sq",
    "jump_time", "channel_weights", "apply_jump_amps", "linear_moments",
]


def falling(x, m):
    """Falling factorial x(x-1)...(x-m+1) as a float; 0 when x < m."""
    x = float(x)
    if x < m:
        return 0.0
    out = 1.0
    for i in range(int(m)):
        out *= x - i
    return out


def _fall_vec(x, m):
    # vectorized falling factorial; callers guarantee x >= m elementwise
    out = np.ones_like(x)
    for i in range(int(m)):
        out = out * (x - i)
    return out


def sector_tables(n_tot, gamma1, gamma2, gamma3):
    """Per-sector coefficient tables used by the other kernels.

    Returns (hquad, lam, chan) with
      hquad[k]   = (2k - n_tot)^2 / 4, the S_z^2 eigenvalue of |k, n-k>
      chan[c, k] = gamma_m * n_mode (n_mode - 1) ... (n_mode - m + 1)
      lam[k]     = sum_c chan[c, k], total decay rate of |k, n-k>
    Channel order c = (a,1), (a,2), (a,3), (b,1), (b,2), (b,3).
    """
    n = int(n_tot)
    k = np.arange(n + 1, dtype=np.float64)
    nb = n - k
    hquad = (2.0 * k - n) ** 2 / 4.0
    chan = np.empty((6, n + 1))
    chan[0] = gamma1 * k
    chan[1] = gamma2 * k * (k - 1.0)
    chan[2] = gamma3 * k * (k - 1.0) * (k - 2.0)
    chan[3] = gamma1 * nb
    chan[4] = gamma2 * nb * (nb - 1.0)
    chan[5] = gamma3 * nb * (nb - 1.0) * (nb - 2.0)
    lam = chan.sum(axis=0)
    return hquad, lam, chan


def propagate_segment(amps, hquad, lam, chi, dt):
    """No-jump drift over dt: twisting phase plus norm decay.

    Multiplies each amplitude by exp(-i chi hquad[k] dt - lam[k] dt / 2);
    the result is intentionally left unnormalized (its squared norm is
    the no-jump probability relative to the start of the segment).
    """
    phase = (chi * dt) * hquad
    damp = np.exp(-0.5 * dt * lam)
    return amps * (damp * np.cos(phase) - 1j * (damp * np.sin(phase)))


def norm_sq(amps):
    return float(np.sum(amps.real ** 2 + amps.imag ** 2))


def jump_time(amps, lam, r, horizon, tol):
    """First-passage time tau in (0, horizon] at which the no-jump
    squared norm sum_k p_k exp(-lam_k tau) decays to r, or -1.0 if it
    stays above r through the whole horizon.

    Newton iteration on ln of the norm with a bisection safeguard; tau
    is resolved to tol * horizon.
    """
    p = amps.real ** 2 + amps.imag ** 2
    s_hor = float(np.sum(p * np.exp(-lam * horizon)))
    if s_hor >= r:
        return -1.0
    s0 = float(np.sum(p))
    if s0 <= r:
        return 0.0
    g0 = np.log(s0 / r)
    lo, hi = 0.0, horizon
    if s_hor > 0.0:
        tau = horizon * g0 / (g0 - np.log(s_hor / r))
    else:
        tau = 0.5 * horizon
    for _ in range(200):
        e = np.exp(-lam * tau)
        s = float(np.sum(p * e))
        if s <= 0.0:
            # norm underflowed: the root lies below tau
            hi = tau
            t_new = 0.5 * (lo + hi)
            if abs(t_new - tau) <= tol * horizon:
                return t_new
            tau = t_new
            continue
        ds = float(np.sum(-(lam * p) * e))
        g = np.log(s / r)
        if g > 0.0:
            lo = tau
        else:
            hi = tau
        t_new = tau - g * s / ds
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - tau) <= tol * horizon:
            return t_new
        tau = t_new
    return tau


def channel_weights(amps, chan):
    """Total rate of each jump channel in the given state (raw sums)."""
    p = amps.real ** 2 + amps.imag ** 2
    return chan @ p


def apply_jump_amps(amps, mode, m, n_tot):
    """Remove m particles from one mode (0 = a, 1 = b).

    Returns the n_tot - m sector amplitudes, unnormalized: the squared
    norm of the result is the relative weight of this jump channel.
    """
    n = int(n_tot)
    m = int(m)
    j = np.arange(n - m + 1, dtype=np.float64)
    if mode == 0:
        w = np.sqrt(_fall_vec(j + m, m))
        return w * amps[m:]
    w = np.sqrt(_fall_vec(n - j, m))
    return w * amps[:n - m + 1]


def linear_moments(amps, n_tot):
    """The 11 moment accumulators of one sector state (raw sums; see the
    module docstring for the layout)."""
    n = int(n_tot)
    k = np.arange(n + 1, dtype=np.float64)
    p = amps.real ** 2 + amps.imag ** 2
    szk = k - 0.5 * n
    out = np.empty(NMOM)
    out[M_N] = n * float(np.sum(p))
    out[M_ADAGA] = float(np.sum(k * p))
    out[M_ABBA] = float(np.sum(k * (n - k) * p))
    out[M_SZ] = float(np.sum(szk * p))
    out[M_SZ2] = float(np.sum(szk * szk * p))
    if n >= 1:
        kk = k[1:]
        ov1 = np.conj(amps[:-1]) * amps[1:]
        w1 = np.sqrt(kk * (n - kk + 1.0))
        bdaga = np.sum(w1 * ov1)
        bbba = np.sum((n - kk) * w1 * ov1)
    else:
        bdaga = 0.0j
        bbba = 0.0j
    if n >= 2:
        kk2 = k[2:]
        ov2 = np.conj(amps[:-2]) * amps[2:]
        w2 = np.sqrt(kk2 * (kk2 - 1.0) * (n - kk2 + 1.0) * (n - kk2 + 2.0))
        bbaa = np.sum(w2 * ov2)
    else:
        bbaa = 0.0j
    out[M_BDAGA_RE] = bdaga.real
    out[M_BDAGA_IM] = bdaga.imag
    out[M_BBAA_RE] = bbaa.real
    out[M_BBAA_IM] = bbaa.imag
    out[M_BBBA_RE] = bbba.real
    out[M_BBBA_IM] = bbba.imag
    return out
