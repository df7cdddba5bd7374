"""Closed-form squeezing routes: exact one-body solution, constant-rate
moments, and the large-N asymptotic optimum.

Conventions shared by all routes: N is the initial atom number, chi the
twisting rate, gamma_m the m-body mode loss constants of ModelParams.
The initial fractional loss rates are Gamma_m = m gamma_m (N/2)^(m-1)
and their squeezing-weighted sum is Gamma_sq = sum_m m Gamma_m; the
dimensionless loss-vs-twisting parameter is C = Gamma_sq / (2 chi).
All large powers are taken in log space so N ~ 10^6 stays finite.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fock import MomentSet, xi2_from_moments

__all__ = [
    "DomainError", "lost_rates", "gamma_sq_rate", "c_param", "f_of_c",
    "xi2_one_body_exact", "f_log_derivatives", "moments_constant_rate",
    "xi2_constant_rate", "xi2_asymptotic", "xi2_lossless_asymptotic",
    "xi2_asymptotic_penalty", "AsymptoticInputs", "best_time_and_xi2",
    "MinimizeResult", "minimize_xi2_over_t", "survival_xi2",
]

COS_FLOOR = 1e-3


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its valid domain."""


def lost_rates(n, gammas):
    """Initial fractional loss rates (Gamma_1, Gamma_2, Gamma_3)."""
    half = 0.5 * n
    return tuple(m * g * half ** (m - 1) for m, g in zip((1, 2, 3), gammas))


def gamma_sq_rate(n, gammas):
    """Squeezing-weighted total loss rate Gamma_sq = sum_m m Gamma_m."""
    return float(sum(m * G for m, G in zip((1, 2, 3), lost_rates(n, gammas))))


def c_param(n, chi, gammas):
    return gamma_sq_rate(n, gammas) / (2.0 * chi)


def f_of_c(c):
    """Positive root f of f^2 + 2 C f - 12 = 0."""
    if c < 0:
        raise ValueError("C must be nonnegative")
    # conjugate form: no cancellation at large C
    return 12.0 / (math.hypot(c, 2.0 * math.sqrt(3.0)) + c)


def xi2_one_body_exact(n, chi, gamma, t):
    """Squeezing under twisting with one-body losses only, evaluated from
    the exact moment solution.

    The two time-dependent bases generalize cos(chi t) and cos(2 chi t)
    of the lossless case and must stay positive for the cos^N powers to
    be taken in log space; outside that region the closed form does not
    apply and a DomainError is raised.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    n = float(n)
    den1 = gamma * gamma + chi * chi
    den2 = gamma * gamma + 4.0 * chi * chi
    if den1 == 0.0:
        return 1.0
    e = math.exp(-gamma * t)
    base1 = (gamma * gamma
             + chi * (gamma * math.sin(chi * t) + chi * math.cos(chi * t)) * e) / den1
    base2 = (gamma * gamma
             + 2.0 * chi * (gamma * math.sin(2.0 * chi * t)
                            + 2.0 * chi * math.cos(2.0 * chi * t)) * e) / den2
    if base1 <= 0.0 or base2 <= 0.0:
        raise DomainError("exact formula outside its positive-bracket domain")
    log1 = math.log(base1)
    a_t = 1.0 - math.exp((n - 2.0) * math.log(base2))
    b_t = 4.0 * math.sin(chi * t) * math.exp((n - 2.0) * log1)
    bracket = 1.0 + 0.25 * (n - 1.0) * e * (a_t - math.hypot(a_t, b_t))
    return bracket * math.exp(-(2.0 * n - 2.0) * log1)


def f_log_derivatives(beta, alpha, gammas, chi, t, cos_floor=COS_FLOOR):
    """F_beta(alpha) and its first two alpha-derivatives.

    F_beta = exp(sum_m w_m e^{alpha m}) with
    w_m = 2 gamma_m t sin(m beta chi t) / (m beta chi t cos^m(beta chi t)),
    the beta = 0 case being the sinc -> 1, cos -> 1 limit.  The
    derivatives follow from the log-derivative chain: with
    g = sum_m m w_m e^{alpha m} and h = sum_m m^2 w_m e^{alpha m},
    F' = F g and F'' = F (g^2 + h).
    """
    s, g, h = _sgh(beta, alpha, gammas, chi, t, cos_floor)
    if s > 600.0:
        raise DomainError("exp(%g) outside floating range" % s)
    f = math.exp(s)
    return f, f * g, f * (g * g + h)


def _sgh(beta, alpha, gammas, chi, t, cos_floor):
    """Log-space core of f_log_derivatives: (S, g, h) with F = e^S,
    F' = F g, F'' = F (g^2 + h)."""
    if beta not in (0, 1, 2):
        raise ValueError("beta must be 0, 1 or 2")
    c = 1.0
    if beta > 0:
        c = math.cos(beta * chi * t)
        if c <= cos_floor:
            raise DomainError("cos(%d chi t) = %g at or below the floor %g"
                              % (beta, c, cos_floor))
    s = 0.0
    g = 0.0
    h = 0.0
    for m, gam in zip((1, 2, 3), gammas):
        if gam <= 0.0:
            continue
        if beta == 0:
            w = 2.0 * gam * t
        else:
            x = m * beta * chi * t
            sinc = math.sin(x) / x if x != 0.0 else 1.0
            w = 2.0 * gam * t * sinc / c ** m
        e = w * math.exp(alpha * m)
        s += e
        g += m * e
        h += m * m * e
    return s, g, h


def _nn1(n, trip):
    """(N - d/da)(N - 1 - d/da) applied to F, from (F, F', F'')."""
    f, fp, fpp = trip
    return n * (n - 1.0) * f - (2.0 * n - 1.0) * fp + fpp


def moments_constant_rate(n, chi, gammas, t):
    """Moment set under the constant-loss-rate approximation.

    Valid while the lost fraction sum_m Gamma_m t stays small and
    chi t < pi/4 (so cos(2 chi t) stays positive); both limits raise
    DomainError when crossed.  Mean occupations decay linearly with the
    initial rates; <a^ a> = <N>/2 and Var S_z = <N>/4 are kept at their
    symmetric-state values.
    """
    n = float(n)
    if n < 2:
        raise ValueError("need at least two particles")
    if t < 0:
        raise ValueError("t must be nonnegative")
    ct = chi * t
    if not ct < 0.25 * math.pi:
        raise DomainError("chi t = %g outside the constant-rate domain chi t < pi/4" % ct)
    big = lost_rates(n, gammas)
    lost = sum(big) * t
    if lost >= 1.0:
        raise DomainError("linearized lost fraction %g >= 1" % lost)
    lam = 2.0 * sum(g * (0.5 * n) ** m for m, g in zip((1, 2, 3), gammas))
    alpha = math.log(0.5 * n)
    # e^{-lam t} cancels the leading growth of each F_beta, so every
    # factor is assembled in log space around S_beta - lam t (which is
    # exactly 0 for beta = 0) before a single guarded exp
    s0, g0, h0 = _sgh(0, alpha, gammas, chi, t, COS_FLOOR)
    s1, g1, h1 = _sgh(1, alpha, gammas, chi, t, COS_FLOOR)
    s2, g2, h2 = _sgh(2, alpha, gammas, chi, t, COS_FLOOR)
    log_c1 = math.log(math.cos(ct))
    log_c2 = math.log(math.cos(2.0 * ct))

    def scaled(log_pref, s, poly):
        expo = log_pref + s - lam * t
        if expo > 600.0:
            raise DomainError("moment exp(%g) outside floating range" % expo)
        return math.exp(expo) * poly

    def p_nn1(g, h):
        return n * (n - 1.0) - (2.0 * n - 1.0) * g + (g * g + h)

    bdaga = 0.5 * scaled((n - 1.0) * log_c1, s1, n - g1)
    quad_a = 0.125 * (scaled(0.0, s0, p_nn1(g0, h0))
                      - scaled((n - 2.0) * log_c2, s2, p_nn1(g2, h2)))
    quad_b = 0.5 * math.sin(ct) * scaled((n - 2.0) * log_c1, s1,
                                         p_nn1(g1, h1))
    n_mean = n * (1.0 - lost)
    return MomentSet(n_mean=n_mean, adaga=0.5 * n_mean, bdaga=complex(bdaga),
                     quad_A=quad_a, quad_B=quad_b, var_sz=0.25 * n_mean)


def xi2_constant_rate(n, chi, gammas, t):
    """SqueezingResult of the constant-rate moments at time t."""
    return xi2_from_moments(moments_constant_rate(n, chi, gammas, t))


def xi2_lossless_asymptotic(n, chi, t):
    """Two-term lossless expansion 1/(N chi t)^2 ... around the optimum."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = n * chi * t
    return 1.0 / (x * x) + (n * n) * (chi * t) ** 4 / 6.0


def xi2_asymptotic(n, chi, gamma_sq, t):
    """Three-term expansion: lossless part plus the Gamma_sq t / 3 penalty."""
    return xi2_lossless_asymptotic(n, chi, t) + gamma_sq * t / 3.0


def xi2_asymptotic_penalty(n, chi, gamma_sq, t):
    """Penalty form xi0^2 (1 + Gamma_sq t / (3 xi0^2)); algebraically
    identical to xi2_asymptotic."""
    xi0 = xi2_lossless_asymptotic(n, chi, t)
    return xi0 * (1.0 + gamma_sq * t / (3.0 * xi0))


@dataclass(frozen=True)
class AsymptoticInputs:
    """Inputs of the large-N optimum; c_param defaults to
    Gamma_sq / (2 chi) when not given explicitly."""
    n_init: float
    chi: float
    gamma_sq: float
    c_param: float = None

    def __post_init__(self):
        if self.chi <= 0:
            raise ValueError("chi must be positive")
        if self.c_param is None:
            object.__setattr__(self, "c_param",
                               self.gamma_sq / (2.0 * self.chi))


def best_time_and_xi2(inputs):
    """Optimal twisting time and squeezing of the three-term expansion.

    t_best = (f/2)^(1/3) N^(-2/3) / chi and
    xi2_best = (f^(-2/3) + f^(4/3)/24 + C f^(1/3)/3) (2/N)^(2/3)
    with f = sqrt(C^2 + 12) - C.
    """
    n = float(inputs.n_init)
    c = inputs.c_param
    f = f_of_c(c)
    t_best = (0.5 * f) ** (1.0 / 3.0) * n ** (-2.0 / 3.0) / inputs.chi
    bracket = f ** (-2.0 / 3.0) + f ** (4.0 / 3.0) / 24.0 \
        + c * f ** (1.0 / 3.0) / 3.0
    return t_best, bracket * (2.0 / n) ** (2.0 / 3.0)


class MinimizeResult(NamedTuple):
    t: float
    value: float
    unimodal: bool


_INVPHI = 0.5 * (math.sqrt(5.0) - 1.0)


def minimize_xi2_over_t(curve, bracket, rel_tol=1e-6, n_scan=64):
    """Scalar minimization of a squeezing curve over time.

    A coarse scan over the open bracket locates the valley and checks
    unimodality (domain errors simply mark points as unusable); golden
    section then refines to relative time tolerance rel_tol.  If the
    scan is not unimodal the global grid minimum is returned with
    unimodal=False.
    """
    t_lo, t_hi = float(bracket[0]), float(bracket[1])
    if not t_hi > t_lo:
        raise ValueError("empty bracket")

    def f(t):
        try:
            v = curve(t)
        except (DomainError, ValueError, OverflowError):
            return math.inf
        return v if np.isfinite(v) else math.inf

    ts = np.linspace(t_lo, t_hi, n_scan + 2)[1:-1]
    vals = np.array([f(t) for t in ts])
    if not np.any(np.isfinite(vals)):
        raise DomainError("curve has no finite values on the bracket")
    i = int(np.argmin(vals))

    # unimodal means: finite values fall monotonically into the valley
    # and rise monotonically after it (ties allowed, the grid may
    # straddle the minimum symmetrically)
    finite = np.isfinite(vals)
    idx = np.flatnonzero(finite)
    sub = vals[idx]
    j = int(np.argmin(sub))
    unimodal = bool(np.all(np.diff(sub[:j + 1]) <= 0.0)
                    and np.all(np.diff(sub[j:]) >= 0.0)
                    and 0 < i < len(ts) - 1)
    if not unimodal:
        return MinimizeResult(float(ts[i]), float(vals[i]), False)

    a = float(ts[i - 1])
    b = float(ts[i + 1])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    while b - a > rel_tol * max(abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    if fc < fd:
        return MinimizeResult(c, fc, True)
    return MinimizeResult(d, fd, True)


def survival_xi2(xi2_t1, n_mean_t1, sx_t1, gamma1, t2):
    """Squeezing after the twisting is switched off and one-body losses
    act alone for a further time t2.

    Returns (exact, approx).  The exact form relaxes toward the
    plateau <N>^2 / (4 <S_x>^2) of the initial state; the approximate
    form replaces that plateau by 1.
    """
    if sx_t1 == 0.0:
        raise ValueError("sx_t1 must be nonzero")
    if gamma1 < 0 or t2 < 0:
        raise ValueError("gamma1 and t2 must be nonnegative")
    plateau = 0.25 * n_mean_t1 ** 2 / sx_t1 ** 2
    decay = math.exp(-gamma1 * t2)
    exact = plateau - (plateau - xi2_t1) * decay
    approx = 1.0 - (1.0 - xi2_t1) * decay
    return exact, approx
