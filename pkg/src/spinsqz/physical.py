"""Laboratory to model parameter mapping and the global optimization.

A condensate in the Thomas-Fermi regime maps (mass, scattering length,
trap frequency, loss constants K_m, atom number) onto the twisting rate
chi and the fractional loss rates Gamma_m; all prefactors are kept in
exact radical form.  The optimization then proceeds in two nested
steps: at fixed N the trap frequency that minimizes C satisfies
3 Gamma_3 = Gamma_1, and N is raised until the attainable squeezing is
within a chosen margin eta of its N -> infinity floor.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .analytic import (AsymptoticInputs, DomainError, best_time_and_xi2,
                       f_of_c, gamma_sq_rate, lost_rates,
                       minimize_xi2_over_t, xi2_constant_rate)
from .fock import ModelParams

__all__ = [
    "HBAR", "K_CHI", "K2_COEF", "K3_COEF", "W_OMEGA",
    "PhysicalParams", "TFDerived", "Optimum",
    "tf_map", "omega_opt", "xi2_floor", "closed_form_coefficients",
    "closed_form_optimum", "optimize_all", "scan_n",
    "read_k3_table", "feshbach_scan",
]

HBAR = 1.054571817e-34  # J s

# Thomas-Fermi prefactors, exact radicals
K_CHI = 2.0 ** 0.6 * 3.0 ** 0.4 / 5.0 ** 0.6
K2_COEF = 15.0 ** 0.4 / (2.0 ** 1.4 * 7.0 * math.pi)
K3_COEF = 5.0 ** 0.8 / (2.0 ** 3.8 * 3.0 ** 0.2 * 7.0 * math.pi ** 2)
# trap frequency minimizing C at fixed N, and the combination
# D = K_CHI * W_OMEGA^(6/5) entering chi N at that frequency
W_OMEGA = 2.0 ** (19.0 / 12.0) * 7.0 ** (5.0 / 12.0) * math.pi ** (5.0 / 6.0) \
    / 15.0 ** (1.0 / 3.0)
_D_CHI_N = K_CHI * W_OMEGA ** 1.2
# lost fraction above which the linearized loss model is suspect
LOST_FRACTION_WARN = 0.10


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters, SI units throughout (omega_bar in rad/s)."""
    mass: float
    a_scatt: float
    omega_bar: float
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    n_init: float = 0.0

    def __post_init__(self):
        for name in ("mass", "a_scatt"):
            if getattr(self, name) <= 0:
                raise ValueError("%s must be positive" % name)
        for name in ("omega_bar", "k1", "k2", "k3", "n_init"):
            if getattr(self, name) < 0:
                raise ValueError("%s must be nonnegative" % name)


@dataclass(frozen=True)
class TFDerived:
    """Thomas-Fermi byproducts of tf_map."""
    mu: float
    big_gamma1: float
    big_gamma2: float
    big_gamma3: float

    @property
    def big_gammas(self):
        return (self.big_gamma1, self.big_gamma2, self.big_gamma3)


@dataclass(frozen=True)
class Optimum:
    omega_opt: float
    n_eta: int
    t_best: float
    xi2: float
    xi2_floor: float
    diagnostics: dict = field(default_factory=dict, compare=False)


def tf_map(p):
    """Model parameters of a Thomas-Fermi condensate.

    Returns (ModelParams, TFDerived); the mode loss constants follow
    from the fractional rates via gamma_m = Gamma_m / (m (N/2)^(m-1)).
    """
    if p.omega_bar <= 0 or p.n_init <= 0:
        raise ValueError("omega_bar and n_init must be positive")
    hm = HBAR / p.mass
    n = float(p.n_init)
    a0 = math.sqrt(hm / p.omega_bar)
    mu = 0.5 * HBAR * p.omega_bar * (7.5 * n * p.a_scatt / a0) ** 0.4
    chi = K_CHI * hm ** -0.2 * p.a_scatt ** 0.4 * p.omega_bar ** 1.2 * n ** -0.6
    g1 = p.k1
    g2 = K2_COEF * hm ** -1.2 * p.a_scatt ** -0.6 * p.omega_bar ** 1.2 \
        * n ** 0.4 * p.k2
    g3 = K3_COEF * hm ** -2.4 * p.a_scatt ** -1.2 * p.omega_bar ** 2.4 \
        * n ** 0.8 * p.k3
    gammas = tuple(G / (m * (0.5 * n) ** (m - 1))
                   for m, G in zip((1, 2, 3), (g1, g2, g3)))
    model = ModelParams(n_init=int(round(n)), chi=chi, gamma1=gammas[0],
                        gamma2=gammas[1], gamma3=gammas[2])
    return model, TFDerived(mu=mu, big_gamma1=g1, big_gamma2=g2, big_gamma3=g3)


def omega_opt(mass, a_scatt, n, k1, k3):
    """Trap frequency minimizing C at fixed N; requires both one- and
    three-body losses (otherwise C is monotone in omega_bar)."""
    if k1 <= 0 or k3 <= 0:
        raise ValueError("no interior optimum: need k1 > 0 and k3 > 0")
    return W_OMEGA * (HBAR / mass) * math.sqrt(a_scatt) * float(n) ** (-1.0 / 3.0) \
        * (k1 / k3) ** (5.0 / 12.0)


def xi2_floor(p):
    """The N -> infinity, omega-optimized lower bound of the squeezing."""
    pref = (5.0 * math.sqrt(3.0) / (28.0 * math.pi)
            * p.mass / (HBAR * p.a_scatt)) ** (2.0 / 3.0)
    return pref * (math.sqrt(3.5 * p.k1 * p.k3) + p.k2) ** (2.0 / 3.0)


def _xi2_best_at_omega_opt(p, n):
    """(t_best, xi2_best, model, derived, C) at N = n with the trap
    frequency re-optimized for that N."""
    w = omega_opt(p.mass, p.a_scatt, n, p.k1, p.k3)
    pn = replace(p, omega_bar=w, n_init=float(n))
    model, derived = tf_map(pn)
    c = gamma_sq_rate(n, model.gammas) / (2.0 * model.chi)
    t_best, xi2 = best_time_and_xi2(
        AsymptoticInputs(n_init=n, chi=model.chi, gamma_sq=0.0, c_param=c))
    return t_best, xi2, model, derived, c, w


def closed_form_coefficients(eta):
    """Dimensionless coefficients (for N_eta, t_best, xi2) of the pure
    one- plus three-body optimization, K2 = 0.

    At the optimal trap frequency C is proportional to N, so demanding
    xi2 = (1 + eta) xi2_floor fixes C = C_eta through
    bracket(C) (2/C)^(2/3) = (1 + eta) 3^(1/3), whose left side falls
    monotonically to the large-C limit 3^(1/3).  The three returned
    numbers multiply hbar a / (M sqrt(K1 K3)),
    (M / (hbar K1))^(2/3) (K3 / a^2)^(1/3) and
    (M K1 / hbar)^(1/3) (M K3 / (hbar a^2))^(1/3) respectively.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    target = (1.0 + eta) * 3.0 ** (1.0 / 3.0)

    def excess(c):
        f = f_of_c(c)
        bracket = f ** (-2.0 / 3.0) + f ** (4.0 / 3.0) / 24.0 \
            + c * f ** (1.0 / 3.0) / 3.0
        return bracket * (2.0 / c) ** (2.0 / 3.0) - target

    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("eta too small to bracket C_eta")
    c_eta = brentq(excess, 1e-12, hi, xtol=1e-15, rtol=1e-15)
    f = f_of_c(c_eta)
    coef_n = c_eta * _D_CHI_N
    coef_t = (0.5 * f * c_eta) ** (1.0 / 3.0) * _D_CHI_N ** (-2.0 / 3.0)
    coef_x = (1.0 + eta) * 3.0 ** (1.0 / 3.0) * _D_CHI_N ** (-2.0 / 3.0)
    return coef_n, coef_t, coef_x


def closed_form_optimum(mass, a_scatt, k1, k3, eta):
    """(N_eta, t_best, xi2) from the closed-form coefficients (K2 = 0)."""
    coef_n, coef_t, coef_x = closed_form_coefficients(eta)
    n_eta = coef_n * HBAR * a_scatt / (mass * math.sqrt(k1 * k3))
    t_best = coef_t * (mass / (HBAR * k1)) ** (2.0 / 3.0) \
        * (k3 / a_scatt ** 2) ** (1.0 / 3.0)
    xi2 = coef_x * (mass * k1 / HBAR) ** (1.0 / 3.0) \
        * (mass * k3 / (HBAR * a_scatt ** 2)) ** (1.0 / 3.0)
    return n_eta, t_best, xi2


def optimize_all(p, eta):
    """Joint optimum over trap frequency, atom number and time.

    Finds N_eta such that the squeezing attainable at the re-optimized
    trap frequency equals (1 + eta) times the N -> infinity floor, by
    bracketed root finding on ln N (xi2 falls monotonically toward the
    floor).  The K2 = 0 closed forms are evaluated alongside as a cross
    check whenever they apply.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if p.k1 <= 0 or p.k3 <= 0:
        raise ValueError("optimization requires k1 > 0 and k3 > 0")
    floor = xi2_floor(p)
    target = (1.0 + eta) * floor

    def excess_log(ln_n):
        return _xi2_best_at_omega_opt(p, math.exp(ln_n))[1] - target

    lo = math.log(2.0)
    if excess_log(lo) <= 0.0:
        raise ValueError("root not bracketed: optimum below N = 2")
    hi = math.log(1e4)
    while excess_log(hi) > 0.0:
        hi += math.log(10.0)
        if hi > math.log(1e30):
            raise ValueError("root not bracketed: eta too small for the "
                             "numeric range")
    ln_n = brentq(excess_log, lo, hi, xtol=1e-12, rtol=1e-14)
    n_eta = math.exp(ln_n)
    t_best, xi2, model, derived, c, w = _xi2_best_at_omega_opt(p, n_eta)
    lost = sum(G * t_best for G in derived.big_gammas)
    diagnostics = {
        "eta": eta,
        "n_eta_exact": n_eta,
        "chi": model.chi,
        "gammas": model.gammas,
        "big_gammas": derived.big_gammas,
        "c_param": c,
        "f_of_c": f_of_c(c),
        "lost_fraction": lost,
        "lost_fraction_warn": lost > LOST_FRACTION_WARN,
    }
    if p.k2 == 0.0:
        cf_n, cf_t, cf_x = closed_form_optimum(p.mass, p.a_scatt, p.k1, p.k3, eta)
        diagnostics["closed_form"] = {"n_eta": cf_n, "t_best": cf_t, "xi2": cf_x}
    return Optimum(omega_opt=w, n_eta=int(round(n_eta)), t_best=t_best,
                   xi2=xi2, xi2_floor=floor, diagnostics=diagnostics)


def _masked(p, loss_mask):
    m1, m2, m3 = loss_mask
    return replace(p, k1=p.k1 if m1 else 0.0, k2=p.k2 if m2 else 0.0,
                   k3=p.k3 if m3 else 0.0)


def scan_n(p, n_grid, loss_mask=(True, True, True)):
    """Best squeezing versus atom number at fixed trap frequency.

    Per N both routes are emitted: the closed-form expansion optimum
    (t_asym, xi2_asym) and a numerical minimization of the
    constant-rate curve (t_rate, xi2_rate, nan where its domain is
    exhausted).  Returns a list of row dicts.
    """
    pm = _masked(p, loss_mask)
    rows = []
    for n in np.asarray(n_grid, dtype=np.float64):
        model, derived = tf_map(replace(pm, n_init=float(n)))
        c = gamma_sq_rate(n, model.gammas) / (2.0 * model.chi)
        t_asym, xi2_asym = best_time_and_xi2(
            AsymptoticInputs(n_init=n, chi=model.chi, gamma_sq=0.0, c_param=c))
        row = {"n": float(n), "t_asym": t_asym, "xi2_asym": xi2_asym,
               "t_rate": math.nan, "xi2_rate": math.nan, "flag": ""}
        try:
            curve = lambda t: xi2_constant_rate(n, model.chi, model.gammas, t).xi2
            hi = min(0.2 * math.pi / model.chi, 20.0 * t_asym)
            big_total = sum(lost_rates(n, model.gammas))
            if big_total > 0.0:
                hi = min(hi, 0.95 / big_total)
            res = minimize_xi2_over_t(curve, (0.0, hi))
            row["t_rate"] = res.t
            row["xi2_rate"] = res.value
            if not res.unimodal:
                row["flag"] = "grid_minimum"
        except (DomainError, ValueError):
            row["flag"] = "rate_domain"
        rows.append(row)
    return rows


def read_k3_table(path):
    """K3(B) table: CSV with header B_gauss,K3_m6_per_s and # comments.

    Returns a list of (B, K3) tuples; malformed content raises
    ValueError naming the offending line number.
    """
    rows = []
    with open(path, newline="") as fh:
        seen_header = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not seen_header:
                cols = [c.strip() for c in line.split(",")]
                if cols != ["B_gauss", "K3_m6_per_s"]:
                    raise ValueError(
                        "line %d: expected header 'B_gauss,K3_m6_per_s', got %r"
                        % (lineno, line))
                seen_header = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError("line %d: expected two columns, got %r"
                                 % (lineno, line))
            try:
                b = float(parts[0])
                k3 = float(parts[1])
            except ValueError:
                raise ValueError("line %d: non-numeric value in %r"
                                 % (lineno, line)) from None
            if k3 < 0:
                raise ValueError("line %d: K3 must be nonnegative" % lineno)
            rows.append((b, k3))
    if not seen_header:
        raise ValueError("missing header 'B_gauss,K3_m6_per_s'")
    if not rows:
        raise ValueError("table has no data rows")
    bs = [b for b, _ in rows]
    if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
        raise ValueError("table must be strictly increasing in B")
    return rows


def feshbach_scan(k3_table, a_model, p_base, eta):
    """Optimum squeezing along a Feshbach ramp.

    a_model = (a_bg, delta_b, b0) parameterizes
    a(B) = a_bg (1 - delta_b / (B - b0)); rows where a(B) <= 0 (or B sits
    on the pole) are skipped with a flag.  Returns a list of row dicts.
    """
    a_bg, delta_b, b0 = a_model
    rows = []
    for b, k3 in k3_table:
        row = {"b_gauss": b, "k3": k3, "a_scatt": math.nan,
               "omega_opt": math.nan, "n_eta": math.nan, "xi2": math.nan,
               "flag": ""}
        if b == b0:
            row["flag"] = "on_resonance"
            rows.append(row)
            continue
        a = a_bg * (1.0 - delta_b / (b - b0))
        row["a_scatt"] = a
        if a <= 0.0:
            row["flag"] = "nonpositive_a"
            rows.append(row)
            continue
        p = replace(p_base, a_scatt=a, k3=k3)
        opt = optimize_all(p, eta)
        row["omega_opt"] = opt.omega_opt
        row["n_eta"] = opt.n_eta
        row["xi2"] = opt.xi2
        rows.append(row)
    return rows
