# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython implementation of the sector kernels.

Mirrors _kernels_py one to one; that module documents the conventions
and the moment vector layout and stays the reference implementation.
Summation order is the plain ascending-k loop, so results can differ
from the vectorized numpy path in the last few ulps only.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, log, sin, sqrt

cnp.import_array()


cdef double _fall(double x, int m) noexcept nogil:
    cdef double out = 1.0
    cdef int i
    if x < m:
        return 0.0
    for i in range(m):
        out *= x - i
    return out


def falling(x, m):
    """Falling factorial x(x-1)...(x-m+1) as a float; 0 when x < m."""
    return _fall(float(x), int(m))


def sector_tables(n_tot, gamma1, gamma2, gamma3):
    """Per-sector coefficient tables; see _kernels_py.sector_tables."""
    cdef int n = int(n_tot)
    cdef double g1 = gamma1, g2 = gamma2, g3 = gamma3
    hquad_arr = np.empty(n + 1)
    lam_arr = np.empty(n + 1)
    chan_arr = np.empty((6, n + 1))
    cdef double[::1] hquad = hquad_arr
    cdef double[::1] lam = lam_arr
    cdef double[:, ::1] chan = chan_arr
    cdef int k
    cdef double ka, kb, d
    for k in range(n + 1):
        ka = k
        kb = n - k
        d = 2.0 * ka - n
        hquad[k] = d * d / 4.0
        chan[0, k] = g1 * ka
        chan[1, k] = g2 * ka * (ka - 1.0)
        chan[2, k] = g3 * ka * (ka - 1.0) * (ka - 2.0)
        chan[3, k] = g1 * kb
        chan[4, k] = g2 * kb * (kb - 1.0)
        chan[5, k] = g3 * kb * (kb - 1.0) * (kb - 2.0)
        lam[k] = (chan[0, k] + chan[1, k] + chan[2, k]
                  + chan[3, k] + chan[4, k] + chan[5, k])
    return hquad_arr, lam_arr, chan_arr


def propagate_segment(amps, hquad, lam, chi, dt):
    """No-jump drift over dt; see _kernels_py.propagate_segment."""
    cdef double complex[::1] a = amps
    cdef double[::1] hq = hquad
    cdef double[::1] lm = lam
    cdef double c = chi, d = dt
    cdef Py_ssize_t nk = a.shape[0]
    out_arr = np.empty(nk, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t k
    cdef double ph, damp
    for k in range(nk):
        ph = (c * d) * hq[k]
        damp = exp(-0.5 * d * lm[k])
        out[k] = a[k] * (damp * cos(ph) - 1j * (damp * sin(ph)))
    return out_arr


def norm_sq(amps):
    cdef double complex[::1] a = amps
    cdef Py_ssize_t k
    cdef double s = 0.0
    for k in range(a.shape[0]):
        s += a[k].real * a[k].real + a[k].imag * a[k].imag
    return s


def jump_time(amps, lam, r, horizon, tol):
    """First-passage time of the no-jump norm; see _kernels_py.jump_time."""
    cdef double complex[::1] a = amps
    cdef double[::1] lm = lam
    cdef double rr = r, hor = horizon, tl = tol
    cdef Py_ssize_t nk = a.shape[0]
    cdef Py_ssize_t k
    cdef int it
    cdef double s0 = 0.0, s_hor = 0.0, s, ds, g, g0, g_hor
    cdef double lo, hi, tau, t_new, pk, e
    p_arr = np.empty(nk)
    cdef double[::1] p = p_arr
    for k in range(nk):
        pk = a[k].real * a[k].real + a[k].imag * a[k].imag
        p[k] = pk
        s0 += pk
        s_hor += pk * exp(-lm[k] * hor)
    if s_hor >= rr:
        return -1.0
    if s0 <= rr:
        return 0.0
    g0 = log(s0 / rr)
    lo = 0.0
    hi = hor
    if s_hor > 0.0:
        tau = hor * g0 / (g0 - log(s_hor / rr))
    else:
        tau = 0.5 * hor
    for it in range(200):
        s = 0.0
        ds = 0.0
        for k in range(nk):
            e = exp(-lm[k] * tau)
            s += p[k] * e
            ds += -(lm[k] * p[k]) * e
        if s <= 0.0:
            # norm underflowed: the root lies below tau
            hi = tau
            t_new = 0.5 * (lo + hi)
        else:
            g = log(s / rr)
            if g > 0.0:
                lo = tau
            else:
                hi = tau
            t_new = tau - g * s / ds
            if not (lo < t_new < hi):
                t_new = 0.5 * (lo + hi)
        if fabs(t_new - tau) <= tl * hor:
            return t_new
        tau = t_new
    return tau


def channel_weights(amps, chan):
    """Total rate of each jump channel; see _kernels_py.channel_weights."""
    cdef double complex[::1] a = amps
    cdef double[:, ::1] ch = chan
    cdef Py_ssize_t nk = a.shape[0]
    out_arr = np.empty(6)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t c, k
    cdef double s, pk
    p_arr = np.empty(nk)
    cdef double[::1] p = p_arr
    for k in range(nk):
        p[k] = a[k].real * a[k].real + a[k].imag * a[k].imag
    for c in range(6):
        s = 0.0
        for k in range(nk):
            s += ch[c, k] * p[k]
        out[c] = s
    return out_arr


def apply_jump_amps(amps, mode, m, n_tot):
    """Remove m particles from one mode; see _kernels_py.apply_jump_amps."""
    cdef double complex[::1] a = amps
    cdef int md = int(mode), mm = int(m), n = int(n_tot)
    cdef Py_ssize_t nj = n - mm + 1
    out_arr = np.empty(nj, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t j
    for j in range(nj):
        if md == 0:
            out[j] = sqrt(_fall(j + mm, mm)) * a[j + mm]
        else:
            out[j] = sqrt(_fall(n - j, mm)) * a[j]
    return out_arr


def linear_moments(amps, n_tot):
    """The 11 raw moment accumulators; see _kernels_py for the layout."""
    cdef double complex[::1] a = amps
    cdef int n = int(n_tot)
    cdef Py_ssize_t k
    cdef double pk, szk, w1, w2, kk, re, im
    cdef double s_norm = 0.0, s_adaga = 0.0, s_abba = 0.0
    cdef double s_sz = 0.0, s_sz2 = 0.0
    cdef double bdaga_re = 0.0, bdaga_im = 0.0
    cdef double bbba_re = 0.0, bbba_im = 0.0
    cdef double bbaa_re = 0.0, bbaa_im = 0.0
    out_arr = np.empty(11)
    cdef double[::1] out = out_arr
    for k in range(n + 1):
        pk = a[k].real * a[k].real + a[k].imag * a[k].imag
        szk = k - 0.5 * n
        s_norm += pk
        s_adaga += k * pk
        s_abba += k * (n - k) * pk
        s_sz += szk * pk
        s_sz2 += szk * szk * pk
    for k in range(1, n + 1):
        kk = k
        # conj(a[k-1]) * a[k]
        re = a[k - 1].real * a[k].real + a[k - 1].imag * a[k].imag
        im = a[k - 1].real * a[k].imag - a[k - 1].imag * a[k].real
        w1 = sqrt(kk * (n - kk + 1.0))
        bdaga_re += w1 * re
        bdaga_im += w1 * im
        bbba_re += (n - kk) * w1 * re
        bbba_im += (n - kk) * w1 * im
    for k in range(2, n + 1):
        kk = k
        re = a[k - 2].real * a[k].real + a[k - 2].imag * a[k].imag
        im = a[k - 2].real * a[k].imag - a[k - 2].imag * a[k].real
        w2 = sqrt(kk * (kk - 1.0) * (n - kk + 1.0) * (n - kk + 2.0))
        bbaa_re += w2 * re
        bbaa_im += w2 * im
    out[0] = n * s_norm
    out[1] = s_adaga
    out[2] = bdaga_re
    out[3] = bdaga_im
    out[4] = s_abba
    out[5] = bbaa_re
    out[6] = bbaa_im
    out[7] = bbba_re
    out[8] = bbba_im
    out[9] = s_sz
    out[10] = s_sz2
    return out_arr
