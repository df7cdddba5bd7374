"""Two-mode Fock sectors and the squeezing functional.

A pure state with definite total particle number n lives in the
(n + 1)-dimensional sector spanned by |n_a, n_b = n - n_a>; amplitudes
are indexed by n_a.  Collective pseudospin components are

    S_x = (a^ b + b^ a) / 2
    S_y = (a^ b - b^ a) / (2i)
    S_z = (a^ a - b^ b) / 2

(a^ is the creation operator).  The squeezing parameter is the
number-normalized minimum variance in the plane orthogonal to the mean
spin, which for the states produced here points along x:

    xi2 = <N> min_theta Var(S_y cos theta + S_z sin theta) / <S_x>^2
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .backend import kernels
from ._kernels_py import (
    M_N, M_ADAGA, M_BDAGA_RE, M_BDAGA_IM, M_ABBA,
    M_BBAA_RE, M_BBAA_IM, M_BBBA_RE, M_BBBA_IM, M_SZ, M_SZ2, NMOM,
)

__all__ = [
    "ModelParams", "TwoModeSector", "MomentSet", "SqueezingResult",
    "MeanSpinCollapsedError", "phase_state", "moments",
    "moment_set_from_vector", "xi2_from_moments",
]

# mean spin is treated as collapsed below this fraction of <N>/2
COLLAPSE_RTOL = 1e-9


class MeanSpinCollapsedError(ValueError):
    """<S_x> is too small for the squeezing parameter to be meaningful."""


@dataclass(frozen=True)
class ModelParams:
    """Twisting rate chi and m-body loss rate constants gamma_m.

    gamma_m multiplies the m-particle jump operator of each mode, so the
    initial fractional loss rates are Gamma_m = m gamma_m (n_init/2)^(m-1).
    """
    n_init: int
    chi: float
    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma3: float = 0.0

    def __post_init__(self):
        if self.n_init < 0:
            raise ValueError("n_init must be nonnegative, got %r" % (self.n_init,))
        for name in ("gamma1", "gamma2", "gamma3"):
            if getattr(self, name) < 0:
                raise ValueError("%s must be nonnegative" % name)

    @property
    def gammas(self):
        return (self.gamma1, self.gamma2, self.gamma3)


@dataclass
class TwoModeSector:
    """State amplitudes over one total-number sector.

    amps[k] multiplies |n_a = k, n_b = n_tot - k>; t_ref records the time
    the amplitudes refer to (drift propagation advances it).
    """
    n_tot: int
    amps: np.ndarray
    t_ref: float = 0.0

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (self.n_tot + 1,):
            raise ValueError("amps must have length n_tot + 1 = %d, got shape %r"
                             % (self.n_tot + 1, self.amps.shape))

    def norm_sq(self):
        return kernels.norm_sq(self.amps)

    def normalized(self):
        nsq = self.norm_sq()
        if nsq <= 0.0:
            raise ValueError("cannot normalize a zero state")
        return TwoModeSector(self.n_tot, self.amps / math.sqrt(nsq), self.t_ref)


@dataclass(frozen=True)
class MomentSet:
    """The expectation values entering the squeezing parameter.

    quad_A = Re(<b^ a^ a b> - <b^ b^ a a>) / 2 and quad_B = 2 Im <b^ b^ b a>
    are the transverse-variance combinations; var_sz is Var S_z.  sz is
    <S_z>, zero for the mode-symmetric states produced here.
    """
    n_mean: float
    adaga: float
    bdaga: complex
    quad_A: float
    quad_B: float
    var_sz: float
    sz: float = 0.0


@dataclass(frozen=True)
class SqueezingResult:
    xi2: float
    theta_min: float
    sx_mean: float
    diagnostics: dict = field(default_factory=dict, compare=False)


def phase_state(n_tot, phi=0.0):
    """All n_tot particles in (e^{i phi} |a> + e^{-i phi} |b>) / sqrt(2).

    Binomial amplitudes with relative phase 2 phi between neighbours:
    amps[k] = sqrt(binom(n, k)) 2^{-n/2} e^{i phi (2k - n)}.
    """
    n = int(n_tot)
    if n < 0:
        raise ValueError("n_tot must be nonnegative")
    k = np.arange(n + 1, dtype=np.float64)
    logmag = 0.5 * (gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)) \
        - 0.5 * n * math.log(2.0)
    amps = np.exp(logmag + 1j * phi * (2.0 * k - n))
    return TwoModeSector(n, amps)


def moment_set_from_vector(v):
    """MomentSet from an 11-component moment vector (already normalized)."""
    return MomentSet(
        n_mean=float(v[M_N]),
        adaga=float(v[M_ADAGA]),
        bdaga=complex(v[M_BDAGA_RE], v[M_BDAGA_IM]),
        quad_A=0.5 * (float(v[M_ABBA]) - float(v[M_BBAA_RE])),
        quad_B=2.0 * float(v[M_BBBA_IM]),
        var_sz=float(v[M_SZ2]) - float(v[M_SZ]) ** 2,
        sz=float(v[M_SZ]),
    )


def moments(sector):
    """Normalized moment set of a sector state."""
    nsq = kernels.norm_sq(sector.amps)
    if nsq <= 0.0:
        raise ValueError("zero state has no moments")
    raw = kernels.linear_moments(sector.amps, sector.n_tot)
    return moment_set_from_vector(raw / nsq)


def xi2_from_moments(ms):
    """Squeezing parameter and optimal quadrature angle from a MomentSet.

    The returned xi2 is the reduced form

        xi2 = adaga (adaga + A - sqrt(A^2 + B^2)) / (Re <b^ a>)^2

    which equals <N> min_theta Var(S_theta) / <S_x>^2 whenever
    <a^ a> = <N>/2 and Var S_z = <N>/4, as holds for the symmetric states
    produced here.  The diagnostics carry the direct minimization
    (xi2_direct), exact for arbitrary states via

        Cov(S_y, S_z) = Im <b^ b^ b a> - (<N> - 1) Im <b^ a> / 2
                        - <S_y> <S_z>.
    """
    n = ms.n_mean
    sx = ms.bdaga.real
    if n <= 0.0 or abs(sx) < COLLAPSE_RTOL * n:
        raise MeanSpinCollapsedError(
            "mean spin collapsed (|<S_x>| = %g vs <N> = %g); xi2 undefined"
            % (abs(sx), n))
    A = ms.quad_A
    B = ms.quad_B
    xi2 = ms.adaga * (ms.adaga + A - math.hypot(A, B)) / sx ** 2

    # direct route: variance of S(theta) = S_y cos theta + S_z sin theta
    sy = -ms.bdaga.imag
    vy = A + 0.25 * n - sy * sy
    vz = ms.var_sz
    cov = 0.5 * B + 0.5 * (n - 1.0) * sy - sy * ms.sz
    half_sum = 0.5 * (vy + vz)
    half_dif = 0.5 * (vy - vz)
    theta = 0.5 * math.atan2(-cov, -half_dif)

    def var_at(th):
        c, s = math.cos(th), math.sin(th)
        return vy * c * c + vz * s * s + 2.0 * cov * s * c

    v1 = var_at(theta)
    v2 = var_at(theta + 0.5 * math.pi)
    if v2 < v1:
        theta += 0.5 * math.pi
        v1 = v2
    var_min = half_sum - math.hypot(half_dif, cov)
    diagnostics = {
        "xi2_direct": n * var_min / sx ** 2,
        "var_min": var_min,
        "var_sy": vy,
        "var_sz": vz,
        "cov_yz": cov,
        "sy_mean": sy,
    }
    return SqueezingResult(xi2=xi2, theta_min=theta, sx_mean=sx,
                           diagnostics=diagnostics)
