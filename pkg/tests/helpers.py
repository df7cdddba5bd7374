"""Brute-force dense oracle used across the test suite.

Everything here is built from first principles on the truncated
two-mode product space (kron of single-mode ladder operators, dense
expm of the vectorized Lindblad generator, squeezing from an explicit
scan over quadrature angles) so that agreement with the package is a
genuine cross-check and not a shared-code tautology.
"""

import math

import numpy as np
from scipy.linalg import expm


def destroy(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), k=1)


class DenseTwoMode:
    """Dense operators for two bosonic modes truncated at n_max."""

    def __init__(self, n_max):
        self.n_max = n_max
        self.dim = n_max + 1
        eye = np.eye(self.dim)
        self.a = np.kron(destroy(self.dim), eye)
        self.b = np.kron(eye, destroy(self.dim))
        self.ad = self.a.conj().T
        self.bd = self.b.conj().T
        self.na = self.ad @ self.a
        self.nb = self.bd @ self.b
        self.ntot = self.na + self.nb
        self.sx = 0.5 * (self.ad @ self.b + self.bd @ self.a)
        self.sy = 0.5j * (self.bd @ self.a - self.ad @ self.b)
        self.sz = 0.5 * (self.na - self.nb)

    def hamiltonian(self, chi):
        d = self.na - self.nb
        return 0.25 * chi * (d @ d)

    def sector_vector(self, amps, n_tot):
        """Embed sector amplitudes (index n_a = 0..n_tot) into the
        product space (row-major index n_a * dim + n_b)."""
        amps = np.asarray(amps)
        if n_tot > self.n_max:
            raise ValueError("sector exceeds truncation")
        psi = np.zeros(self.dim * self.dim, dtype=np.complex128)
        for k in range(n_tot + 1):
            psi[k * self.dim + (n_tot - k)] = amps[k]
        return psi

    def blocks_to_rho(self, blocks):
        """Dense density matrix from a list of per-sector blocks
        (block[n][i, j] = <i, n-i| rho |j, n-j>)."""
        rho = np.zeros((self.dim ** 2, self.dim ** 2), dtype=np.complex128)
        for n, blk in enumerate(blocks):
            idx = [k * self.dim + (n - k) for k in range(n + 1)]
            for i, gi in enumerate(idx):
                for j, gj in enumerate(idx):
                    rho[gi, gj] += blk[i, j]
        return rho

    def liouvillian(self, chi, gammas):
        """Vectorized generator, row-major convention:
        vec(A X B) = (A kron B^T) vec(X)."""
        dim2 = self.dim ** 2
        eye = np.eye(dim2)
        h = self.hamiltonian(chi)
        gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        for m, gam in zip((1, 2, 3), gammas):
            if gam == 0.0:
                continue
            for c in (np.linalg.matrix_power(self.a, m),
                      np.linalg.matrix_power(self.b, m)):
                cdc = c.conj().T @ c
                gen += gam * (np.kron(c, c.conj())
                              - 0.5 * np.kron(cdc, eye)
                              - 0.5 * np.kron(eye, cdc.T))
        return gen

    def evolve(self, rho, chi, gammas, t):
        gen = self.liouvillian(chi, gammas)
        vec = expm(gen * t) @ rho.reshape(-1)
        return vec.reshape(self.dim ** 2, self.dim ** 2)

    def expect(self, op, rho):
        return np.trace(op @ rho)

    def moment_vector(self, rho):
        """The 11-slot moment layout of the kernels, as raw traces."""
        e = lambda op: self.expect(op, rho)
        bdaga = e(self.bd @ self.a)
        bbaa = e(self.bd @ self.bd @ self.a @ self.a)
        bbba = e(self.bd @ self.bd @ self.b @ self.a)
        abba = e(self.ad @ self.bd @ self.b @ self.a)
        return np.array([
            e(self.ntot).real,
            e(self.na).real,
            bdaga.real, bdaga.imag,
            abba.real,
            bbaa.real, bbaa.imag,
            bbba.real, bbba.imag,
            e(self.sz).real,
            e(self.sz @ self.sz).real,
        ])

    def _var_theta(self, rho, theta):
        s = math.cos(theta) * self.sy + math.sin(theta) * self.sz
        return (self.expect(s @ s, rho) - self.expect(s, rho) ** 2).real

    def xi2_scan(self, rho, n_theta=2001):
        """Squeezing from an explicit scan over quadrature angles in the
        plane orthogonal to x (S_theta = cos(theta) S_y + sin(theta) S_z),
        followed by one refinement pass around the coarse minimum."""
        n_mean = self.expect(self.ntot, rho).real
        sx = self.expect(self.sx, rho).real
        step = math.pi / n_theta
        thetas = np.arange(n_theta) * step
        vars_coarse = [self._var_theta(rho, th) for th in thetas]
        i = int(np.argmin(vars_coarse))
        best = vars_coarse[i]
        for th in np.linspace(thetas[i] - step, thetas[i] + step, 4001):
            v = self._var_theta(rho, th)
            if v < best:
                best = v
        return n_mean * best / sx ** 2


def random_sector_amps(n_tot, rng):
    """Normalized random complex amplitudes over a fixed-N sector."""
    v = rng.standard_normal(n_tot + 1) + 1j * rng.standard_normal(n_tot + 1)
    return v / np.linalg.norm(v)


def phase_amps(n_tot, phi=0.0):
    """Independent construction of the phase state from the binomial
    expansion of ((e^{i phi} a^+ + e^{-i phi} b^+)/sqrt 2)^N |vac>."""
    ks = np.arange(n_tot + 1)
    c = np.array([math.comb(n_tot, int(k)) for k in ks], dtype=np.float64)
    amps = np.sqrt(c) * 2.0 ** (-0.5 * n_tot) \
        * np.exp(1j * phi * (2 * ks - n_tot))
    return amps


def twist_amps(amps, n_tot, chi, t):
    """Lossless twisting: diagonal phases e^{-i chi t (2k - n)^2 / 4}."""
    ks = np.arange(n_tot + 1)
    return amps * np.exp(-0.25j * chi * t * (2 * ks - n_tot) ** 2)
