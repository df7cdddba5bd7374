"""Trap-to-model mapping and the joint (omega, N, t) optimization."""

import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsqz import (
    HBAR, PhysicalParams, closed_form_coefficients, closed_form_optimum,
    feshbach_scan, gamma_sq_rate, lost_rates, omega_opt, optimize_all,
    read_k3_table, scan_n, tf_map, xi2_floor,
)

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

RB = dict(mass=1.443e-25, a_scatt=5.32e-9, omega_bar=0.0,
          k1=0.01, k2=0.0, k3=6e-42)

FIG1 = PhysicalParams(mass=1.443e-25, a_scatt=5.32e-9,
                      omega_bar=2.0 * math.pi * 200.0,
                      k1=0.1, k2=2e-21, k3=18e-42)


def loglog_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# parameter validation and the mapping itself

def test_params_validation():
    with pytest.raises(ValueError, match="mass"):
        PhysicalParams(mass=0.0, a_scatt=1e-9, omega_bar=1.0)
    with pytest.raises(ValueError, match="a_scatt"):
        PhysicalParams(mass=1e-25, a_scatt=-1e-9, omega_bar=1.0)
    with pytest.raises(ValueError, match="k2"):
        PhysicalParams(mass=1e-25, a_scatt=1e-9, omega_bar=1.0, k2=-1.0)
    with pytest.raises(ValueError, match="omega_bar"):
        PhysicalParams(mass=1e-25, a_scatt=1e-9, omega_bar=-2.0)


def test_tf_map_needs_omega_and_n():
    with pytest.raises(ValueError, match="positive"):
        tf_map(PhysicalParams(mass=1e-25, a_scatt=1e-9, omega_bar=0.0,
                              n_init=100.0))
    with pytest.raises(ValueError, match="positive"):
        tf_map(PhysicalParams(mass=1e-25, a_scatt=1e-9, omega_bar=5.0,
                              n_init=0.0))


def test_tf_map_scaling_exponents():
    base = PhysicalParams(mass=1.443e-25, a_scatt=5e-9,
                          omega_bar=2.0 * math.pi * 150.0,
                          k1=0.05, k2=1e-21, k3=1e-41, n_init=1e5)
    m0, d0 = tf_map(base)

    def ratios(**kw):
        changed = PhysicalParams(**{**base.__dict__, **kw})
        m1, d1 = tf_map(changed)
        return (m1.chi / m0.chi, d1.mu / d0.mu,
                d1.big_gamma2 / d0.big_gamma2, d1.big_gamma3 / d0.big_gamma3)

    for got, expo in zip(ratios(omega_bar=2.0 * base.omega_bar),
                         (1.2, 1.2, 1.2, 2.4)):
        assert got == pytest.approx(2.0 ** expo, rel=1e-12)
    for got, expo in zip(ratios(n_init=2.0 * base.n_init),
                         (-0.6, 0.4, 0.4, 0.8)):
        assert got == pytest.approx(2.0 ** expo, rel=1e-12)
    for got, expo in zip(ratios(a_scatt=2.0 * base.a_scatt),
                         (0.4, 0.4, -0.6, -1.2)):
        assert got == pytest.approx(2.0 ** expo, rel=1e-12)
    for got, expo in zip(ratios(mass=2.0 * base.mass),
                         (0.2, 0.2, 1.2, 2.4)):
        assert got == pytest.approx(2.0 ** expo, rel=1e-12)
    # one-body constants pass through untouched
    assert ratios(k1=3.0 * base.k1) == pytest.approx((1.0, 1.0, 1.0, 1.0))
    assert d0.big_gamma1 == base.k1


def test_tf_map_rate_bookkeeping_round_trip():
    model, derived = tf_map(PhysicalParams(mass=1.443e-25, a_scatt=5.32e-9,
                                           omega_bar=2.0 * math.pi * 200.0,
                                           k1=0.1, k2=2e-21, k3=18e-42,
                                           n_init=2e5))
    # gamma_m = Gamma_m / (m (N/2)^(m-1)) inverts back through lost_rates
    back = lost_rates(2e5, model.gammas)
    for got, want in zip(back, derived.big_gammas):
        assert got == pytest.approx(want, rel=1e-12)


# the trap frequency that balances one- against three-body losses

def test_omega_opt_balances_rates():
    n = 2.5e5
    w = omega_opt(RB["mass"], RB["a_scatt"], n, RB["k1"], RB["k3"])
    p = PhysicalParams(mass=RB["mass"], a_scatt=RB["a_scatt"], omega_bar=w,
                       k1=RB["k1"], k2=0.0, k3=RB["k3"], n_init=n)
    _, derived = tf_map(p)
    assert 3.0 * derived.big_gamma3 == pytest.approx(derived.big_gamma1,
                                                     rel=1e-10)

    def c_at(omega):
        model, _ = tf_map(PhysicalParams(
            mass=RB["mass"], a_scatt=RB["a_scatt"], omega_bar=omega,
            k1=RB["k1"], k2=0.0, k3=RB["k3"], n_init=n))
        return gamma_sq_rate(n, model.gammas) / (2.0 * model.chi)

    c_min = c_at(w)
    assert c_at(1.01 * w) > c_min
    assert c_at(0.99 * w) > c_min


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-26, 1e-24), st.floats(1e-9, 2e-8), st.floats(1e3, 1e7),
       st.floats(1e-3, 1.0), st.floats(1e-44, 1e-40))
def test_omega_opt_balance_property(mass, a, n, k1, k3):
    w = omega_opt(mass, a, n, k1, k3)
    _, derived = tf_map(PhysicalParams(mass=mass, a_scatt=a, omega_bar=w,
                                       k1=k1, k3=k3, n_init=n))
    assert 3.0 * derived.big_gamma3 == pytest.approx(derived.big_gamma1,
                                                     rel=1e-9)


def test_omega_opt_requires_both_channels():
    with pytest.raises(ValueError, match="no interior optimum"):
        omega_opt(1e-25, 5e-9, 1e5, 0.0, 1e-42)
    with pytest.raises(ValueError, match="no interior optimum"):
        omega_opt(1e-25, 5e-9, 1e5, 0.01, 0.0)


# the joint optimum

def test_optimize_all_hits_requested_margin():
    opt = optimize_all(PhysicalParams(**RB), 0.1)
    assert opt.xi2 / opt.xi2_floor == pytest.approx(1.1, rel=1e-9)
    d = opt.diagnostics
    assert d["lost_fraction"] < 0.01 and not d["lost_fraction_warn"]
    assert d["c_param"] > 0.0
    assert d["f_of_c"] == pytest.approx(
        math.hypot(d["c_param"], 2.0 * math.sqrt(3.0)) - d["c_param"],
        rel=1e-12)


def test_optimize_all_rubidium_values():
    # frozen regression anchor for the full worked example
    opt = optimize_all(PhysicalParams(**RB), 0.1)
    assert opt.n_eta == 283059
    assert opt.omega_opt / (2.0 * math.pi) == pytest.approx(20.171884697,
                                                            rel=1e-9)
    assert opt.t_best == pytest.approx(0.044372783179, rel=1e-9)
    assert opt.xi2 == pytest.approx(5.6381067427e-4, rel=1e-9)
    assert opt.xi2_floor == pytest.approx(5.1255515843e-4, rel=1e-9)


def test_optimize_all_guards():
    with pytest.raises(ValueError, match="eta"):
        optimize_all(PhysicalParams(**RB), 0.0)
    with pytest.raises(ValueError, match="k1 > 0"):
        optimize_all(PhysicalParams(mass=1e-25, a_scatt=5e-9, omega_bar=0.0,
                                    k1=0.0, k3=1e-42), 0.1)


def test_eta_monotonicity():
    loose = optimize_all(PhysicalParams(**RB), 0.2)
    tight = optimize_all(PhysicalParams(**RB), 0.1)
    assert loose.n_eta < tight.n_eta
    assert loose.xi2 > tight.xi2


def test_closed_form_coefficients_eta_ten_percent():
    coef_n, coef_t, coef_x = closed_form_coefficients(0.1)
    assert coef_n == pytest.approx(17.8332892451, rel=1e-11)
    assert coef_t == pytest.approx(0.28025103654, rel=1e-11)
    assert coef_x == pytest.approx(0.35609334046, rel=1e-11)
    with pytest.raises(ValueError, match="eta"):
        closed_form_coefficients(-0.1)


def test_closed_form_matches_numeric_over_grid():
    for k1 in (1e-3, 1.0):
        for k3 in (1e-44, 1e-40):
            for a in (1e-9, 2e-8):
                p = PhysicalParams(mass=1.443e-25, a_scatt=a, omega_bar=0.0,
                                   k1=k1, k2=0.0, k3=k3)
                opt = optimize_all(p, 0.1)
                n_cf, t_cf, x_cf = closed_form_optimum(p.mass, a, k1, k3, 0.1)
                assert opt.diagnostics["n_eta_exact"] == \
                    pytest.approx(n_cf, rel=1e-9)
                assert opt.t_best == pytest.approx(t_cf, rel=1e-9)
                assert opt.xi2 == pytest.approx(x_cf, rel=1e-9)


def test_xi2_floor_scattering_length_dependence():
    # at fixed loss constants the floor falls off as a^{-2/3}
    vals = [(a, xi2_floor(PhysicalParams(mass=1.443e-25, a_scatt=a,
                                         omega_bar=0.0, k1=0.01, k3=6e-42)))
            for a in (2e-9, 5e-9, 1.5e-8)]
    ref = vals[0][1] * vals[0][0] ** (2.0 / 3.0)
    for a, v in vals[1:]:
        assert v * a ** (2.0 / 3.0) == pytest.approx(ref, rel=1e-12)


# squeezing versus atom number at fixed trap frequency

def test_scan_n_emits_both_routes():
    rows = scan_n(FIG1, [1e5, 1e6], (True, True, True))
    for row in rows:
        assert row["flag"] == ""
        assert 0.0 < row["xi2_asym"] < 1.0
        assert row["xi2_rate"] == pytest.approx(row["xi2_asym"], rel=0.1)
        assert row["t_rate"] == pytest.approx(row["t_asym"], rel=0.1)


def test_scan_n_asymptotic_slopes():
    grid = np.geomspace(1e7, 1e8, 7)
    for mask, want in (((True, False, False), -4.0 / 15.0),
                       ((False, True, False), 0.0),
                       ((False, False, True), 4.0 / 15.0)):
        rows = scan_n(FIG1, grid, mask)
        slope = loglog_slope(grid, [r["xi2_asym"] for r in rows])
        assert slope == pytest.approx(want, abs=0.02)
    lossless = scan_n(FIG1, grid, (False, False, False))
    slope = loglog_slope(grid, [r["xi2_asym"] for r in lossless])
    assert slope == pytest.approx(-2.0 / 3.0, abs=1e-6)


# the K3(B) table and the Feshbach ramp

def test_read_k3_table_shipped_example():
    rows = read_k3_table(DATA / "k3_example.csv")
    assert len(rows) == 25
    bs = [b for b, _ in rows]
    assert all(b2 > b1 for b1, b2 in zip(bs, bs[1:]))
    b_min, k3_min = min(rows, key=lambda r: r[1])
    assert b_min == 1003.5
    assert k3_min == pytest.approx(3e-45)


def test_read_k3_table_errors(tmp_path):
    cases = [
        ("gauss,K3\n1000,1e-42\n", "line 1: expected header"),
        ("B_gauss,K3_m6_per_s\n1000,1e-42,7\n", "line 2: expected two"),
        ("B_gauss,K3_m6_per_s\n1000,1e-42\n1001,abc\n", "line 3: non-numeric"),
        ("B_gauss,K3_m6_per_s\n1000,-1e-42\n", "line 2: K3 must be"),
        ("B_gauss,K3_m6_per_s\n1000,1e-42\n1000,2e-42\n",
         "strictly increasing"),
        ("# only a comment\n", "missing header"),
        ("B_gauss,K3_m6_per_s\n", "no data rows"),
    ]
    for i, (text, msg) in enumerate(cases):
        path = tmp_path / ("t%d.csv" % i)
        path.write_text(text)
        with pytest.raises(ValueError, match=msg):
            read_k3_table(path)


def test_feshbach_scan_flags_pole_and_negative_a():
    table = [(1007.4, 5e-42), (1007.5, 5e-42), (1008.5, 5e-42)]
    rows = feshbach_scan(table, (5.32e-9, 0.21, 1007.4),
                         PhysicalParams(**RB), 0.1)
    assert rows[0]["flag"] == "on_resonance"
    assert rows[1]["flag"] == "nonpositive_a"
    assert math.isnan(rows[1]["xi2"])
    assert rows[2]["flag"] == ""
    assert rows[2]["xi2"] > 0.0


def test_feshbach_scan_constant_k3_follows_a_scaling():
    # with K3 pinned, the optimum inherits the floor's a^{-2/3} law
    table = [(1000.0, 6e-42), (1003.0, 6e-42), (1006.0, 6e-42)]
    rows = feshbach_scan(table, (5.32e-9, 0.21, 1007.4),
                         PhysicalParams(**RB), 0.1)
    ref = rows[0]["xi2"] * rows[0]["a_scatt"] ** (2.0 / 3.0)
    for row in rows[1:]:
        assert row["xi2"] * row["a_scatt"] ** (2.0 / 3.0) == \
            pytest.approx(ref, rel=1e-9)


def test_feshbach_scan_dip_sits_on_table_minimum():
    rows = feshbach_scan(read_k3_table(DATA / "k3_example.csv"),
                         (5.32e-9, 0.21, 1007.4), PhysicalParams(**RB), 0.1)
    assert all(r["flag"] == "" for r in rows)
    best = min(rows, key=lambda r: r["xi2"])
    assert best["b_gauss"] == 1003.5
