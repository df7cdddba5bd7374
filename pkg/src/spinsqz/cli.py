"""Command line interface.

Seven batch commands with one output convention: tables as CSV (or a
single JSON document with --format json) behind a '#' preamble carrying
the tool version and the full effective configuration, so results are
self-describing and reruns with identical inputs are byte-identical.
Exit codes: 0 success, 2 config error, 3 domain error, 4 I/O error.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .analytic import (DomainError, moments_constant_rate, survival_xi2,
                       xi2_one_body_exact)
from .fock import MeanSpinCollapsedError, ModelParams, phase_state, \
    xi2_from_moments
from ._kernels_py import M_N
from .mcwf import CHANNEL_NAMES, TrajectoryConfig, run_ensemble
from .physical import (PhysicalParams, feshbach_scan, optimize_all,
                       read_k3_table, scan_n)

# config-echo keys that do not affect output content
_ECHO_SKIP = frozenset(("out", "config", "func", "command", "threads"))


def parse_frequency(text):
    """'2pi*200Hz' (or '2pi*200') -> rad/s; a bare number is rad/s.

    A bare 'Hz' suffix is rejected as ambiguous against the rad/s
    convention used everywhere else.
    """
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().replace(" ", "")
    low = s.lower()
    if low.startswith("2pi*"):
        body = s[4:]
        if body.lower().endswith("hz"):
            body = body[:-2]
        try:
            return 2.0 * math.pi * float(body)
        except ValueError:
            raise ValueError("frequency %r: cannot parse the value after "
                             "'2pi*'" % text) from None
    if low.endswith("hz"):
        raise ValueError("frequency %r is ambiguous: write '2pi*%s' for Hz "
                         "or a bare number for rad/s" % (text, s[:-2]))
    try:
        return float(s)
    except ValueError:
        raise ValueError("frequency %r: expected rad/s number or "
                         "'2pi*<value>Hz'" % text) from None


def _loss_mask(text):
    s = str(text).strip().lower()
    if s in ("none", "0"):
        return (False, False, False)
    if s == "all":
        s = "123"
    if not s or not set(s) <= {"1", "2", "3"}:
        raise ValueError("losses: expected a subset of '123', 'all' or "
                         "'none'; got %r" % text)
    return ("1" in s, "2" in s, "3" in s)


def _grid(lo, hi, count, spacing, name):
    if count < 1:
        raise ValueError("%s-count must be >= 1, got %d" % (name, count))
    if hi < lo:
        raise ValueError("%s-max must be >= %s-min" % (name, name))
    if spacing == "log":
        if lo <= 0:
            raise ValueError("%s-min must be positive for log spacing" % name)
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    return x


def _echo(args):
    cfg = {}
    for key, val in vars(args).items():
        if key in _ECHO_SKIP:
            continue
        cfg[key] = _jsonable(val)
    return cfg


def _emit(args, columns, rows, summary=None):
    """Render the table (list of per-column-value lists) and write it."""
    echo = _echo(args)
    if args.format == "json":
        doc = {"meta": {"tool": "spinsqz", "version": __version__,
                        "command": args.command, "config": echo},
               "columns": list(columns),
               "rows": [[_jsonable(v) for v in row] for row in rows]}
        if summary is not None:
            doc["summary"] = _jsonable(summary)
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    else:
        lines = ["# spinsqz %s" % __version__,
                 "# command: %s" % args.command,
                 "# config: %s" % json.dumps(echo, sort_keys=True)]
        if summary is not None:
            lines.append("# summary: %s" % json.dumps(_jsonable(summary),
                                                      sort_keys=True))
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _model_from_args(args):
    return ModelParams(n_init=args.n, chi=args.chi, gamma1=args.gamma1,
                       gamma2=args.gamma2, gamma3=args.gamma3)


def _physical_from_args(args, omega_bar=0.0, n_init=0.0):
    return PhysicalParams(mass=args.mass, a_scatt=args.a_scatt,
                          omega_bar=omega_bar, k1=args.k1, k2=args.k2,
                          k3=args.k3, n_init=n_init)


# per-command bodies

def cmd_exact1b(args):
    grid = _grid(args.t_min, args.t_max, args.t_count, args.t_spacing, "t")
    rows = []
    for t in grid:
        try:
            rows.append((t, xi2_one_body_exact(args.n, args.chi, args.gamma1,
                                               float(t)), ""))
        except DomainError:
            rows.append((t, math.nan, "domain"))
    _emit(args, ("t", "xi2", "flag"), rows)
    return 0


def cmd_analytic(args):
    grid = _grid(args.t_min, args.t_max, args.t_count, args.t_spacing, "t")
    gammas = (args.gamma1, args.gamma2, args.gamma3)
    rows = []
    for t in grid:
        try:
            ms = moments_constant_rate(args.n, args.chi, gammas, float(t))
            xi2 = xi2_from_moments(ms).xi2
            rows.append((t, xi2, ms.n_mean, ms.bdaga.real, ms.quad_A,
                         ms.quad_B, ""))
        except (DomainError, MeanSpinCollapsedError):
            rows.append((t, math.nan, math.nan, math.nan, math.nan,
                         math.nan, "domain"))
    _emit(args, ("t", "xi2", "n_mean", "sx_mean", "quad_a", "quad_b", "flag"),
          rows)
    return 0


def cmd_mc(args):
    grid = _grid(args.t_min, args.t_max, args.t_count, args.t_spacing, "t")
    params = _model_from_args(args)
    cfg = TrajectoryConfig(master_seed=args.seed, n_traj=args.n_traj,
                           t_grid=grid, n_workers=args.threads)
    stats = run_ensemble(params, phase_state(args.n, args.phi), cfg)
    rows = []
    for i, t in enumerate(stats.t_grid):
        rows.append((t, stats.n_mean[i], stats.moments_se[i, M_N],
                     stats.sx_mean[i], stats.xi2[i], stats.xi2_se[i],
                     stats.theta_min[i],
                     "collapsed" if stats.collapsed[i] else ""))
    summary = {
        "n_traj": stats.n_traj,
        "master_seed": stats.master_seed,
        "jump_counts": {name: int(c) for name, c
                        in zip(CHANNEL_NAMES, stats.jump_counts)},
        "jumps_per_trajectory": float(stats.jump_counts.sum()) / stats.n_traj,
        "vacuum_count": stats.vacuum_count,
        "final_lost_fraction": float(stats.lost_fraction[-1]),
    }
    _emit(args, ("t", "n_mean", "n_mean_se", "sx_mean", "xi2", "xi2_se",
                 "theta_min", "flag"), rows, summary=summary)
    return 0


def cmd_optimize(args):
    p = _physical_from_args(args)
    opt = optimize_all(p, args.eta)
    if args.format == "json":
        echo = _echo(args)
        doc = {"meta": {"tool": "spinsqz", "version": __version__,
                        "command": args.command, "config": echo},
               "result": {"omega_opt": opt.omega_opt,
                          "omega_opt_hz": opt.omega_opt / (2.0 * math.pi),
                          "n_eta": opt.n_eta,
                          "t_best": opt.t_best,
                          "xi2": opt.xi2,
                          "xi2_floor": opt.xi2_floor,
                          "diagnostics": _jsonable(opt.diagnostics)}}
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    row = (opt.omega_opt, opt.n_eta, opt.t_best, opt.xi2, opt.xi2_floor,
           opt.diagnostics["c_param"], opt.diagnostics["lost_fraction"])
    _emit(args, ("omega_opt", "n_eta", "t_best", "xi2", "xi2_floor",
                 "c_param", "lost_fraction"), [row])
    return 0


def cmd_fig1(args):
    omega = parse_frequency(args.omega_bar)
    p = PhysicalParams(mass=args.mass, a_scatt=args.a_scatt, omega_bar=omega,
                       k1=args.k1, k2=args.k2, k3=args.k3)
    n_grid = _grid(args.n_min, args.n_max, args.n_count, args.n_spacing, "n")
    rows = [(r["n"], r["t_asym"], r["xi2_asym"], r["t_rate"], r["xi2_rate"],
             r["flag"])
            for r in scan_n(p, n_grid, _loss_mask(args.losses))]
    _emit(args, ("n", "t_asym", "xi2_asym", "t_rate", "xi2_rate", "flag"),
          rows)
    return 0


def cmd_fig2(args):
    table = read_k3_table(args.k3_table)
    p_base = PhysicalParams(mass=args.mass, a_scatt=args.a_bg, omega_bar=0.0,
                            k1=args.k1, k2=args.k2, k3=0.0)
    rows = [(r["b_gauss"], r["k3"], r["a_scatt"], r["omega_opt"], r["n_eta"],
             r["xi2"], r["flag"])
            for r in feshbach_scan(table, (args.a_bg, args.delta_b, args.b0),
                                   p_base, args.eta)]
    _emit(args, ("b_gauss", "k3", "a_scatt", "omega_opt", "n_eta", "xi2",
                 "flag"), rows)
    return 0


def cmd_survival(args):
    direct = args.xi2_t1 is not None
    physical = args.mass is not None
    if direct == physical:
        raise ValueError("survival needs exactly one input mode: either "
                         "--xi2-t1/--n-mean-t1/--sx-t1/--gamma1 or "
                         "--mass/--a-scatt/--k1/--k3/--eta")
    if direct:
        missing = [f for f in ("xi2_t1", "n_mean_t1", "sx_t1", "gamma1")
                   if getattr(args, f) is None]
        if missing:
            raise ValueError("survival direct mode: missing %s"
                             % ", ".join("--" + f.replace("_", "-")
                                         for f in missing))
        xi2_t1, n_mean, sx, gamma1 = (args.xi2_t1, args.n_mean_t1,
                                      args.sx_t1, args.gamma1)
    else:
        if args.a_scatt is None:
            raise ValueError("survival physical mode: missing --a-scatt")
        p = _physical_from_args(args)
        opt = optimize_all(p, args.eta)
        d = opt.diagnostics
        ms = moments_constant_rate(d["n_eta_exact"], d["chi"], d["gammas"],
                                   opt.t_best)
        xi2_t1 = xi2_from_moments(ms).xi2
        n_mean, sx, gamma1 = ms.n_mean, ms.bdaga.real, d["gammas"][0]
    grid = _grid(args.t_min, args.t_max, args.t_count, args.t_spacing, "t")
    rows = []
    for t2 in grid:
        exact, approx = survival_xi2(xi2_t1, n_mean, sx, gamma1, float(t2))
        rows.append((t2, exact, approx))
    _emit(args, ("t2", "xi2_exact", "xi2_approx"), rows)
    return 0


# parser assembly

def _add_common(sp, default_format="csv"):
    sp.add_argument("--out", default=None, metavar="PATH",
                    help="output file (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"),
                    default=default_format)
    sp.add_argument("--seed", type=int, default=20260816)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--config", default=None, metavar="FILE",
                    help="JSON object whose keys override flags of the "
                         "same name")


def _add_time_grid(sp, t_max, t_count=101, spacing="linear"):
    sp.add_argument("--t-min", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=t_max)
    sp.add_argument("--t-count", type=int, default=t_count)
    sp.add_argument("--t-spacing", choices=("linear", "log"),
                    default=spacing)


def _add_model(sp):
    sp.add_argument("--n", type=int, required=True,
                    help="initial total atom number")
    sp.add_argument("--chi", type=float, required=True,
                    help="twisting rate, rad/s")
    sp.add_argument("--gamma1", type=float, default=0.0)
    sp.add_argument("--gamma2", type=float, default=0.0)
    sp.add_argument("--gamma3", type=float, default=0.0)


def _add_physical(sp, required=True):
    sp.add_argument("--mass", type=float, required=required, help="kg")
    sp.add_argument("--a-scatt", type=float, required=required, help="m")
    sp.add_argument("--k1", type=float, default=0.0, help="1/s")
    sp.add_argument("--k2", type=float, default=0.0, help="m^3/s")
    sp.add_argument("--k3", type=float, default=0.0, help="m^6/s")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spinsqz",
        description="Spin squeezing of a lossy two-mode condensate: exact "
                    "and asymptotic analytics, Monte Carlo wavefunction "
                    "simulation, and optimization over trap frequency, atom "
                    "number and time.")
    parser.add_argument("--version", action="version",
                        version="spinsqz " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("exact1b",
                        help="exact one-body-loss squeezing curve")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--chi", type=float, required=True)
    sp.add_argument("--gamma1", type=float, default=0.0)
    _add_time_grid(sp, t_max=1.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_exact1b)

    sp = sub.add_parser("analytic",
                        help="constant-rate squeezing and moments")
    _add_model(sp)
    _add_time_grid(sp, t_max=1.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("mc", help="Monte Carlo wavefunction ensemble")
    _add_model(sp)
    sp.add_argument("--phi", type=float, default=0.0,
                    help="initial relative phase")
    sp.add_argument("--n-traj", type=int, default=400)
    _add_time_grid(sp, t_max=1.0, t_count=21)
    _add_common(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("optimize",
                        help="joint optimum over trap frequency, atom "
                             "number and time")
    _add_physical(sp)
    sp.add_argument("--eta", type=float, default=0.1,
                    help="relative margin above the large-N floor")
    _add_common(sp, default_format="json")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("fig1",
                        help="best squeezing versus atom number at fixed "
                             "trap frequency")
    _add_physical(sp)
    sp.add_argument("--omega-bar", required=True,
                    help="trap frequency: rad/s or '2pi*<value>Hz'")
    sp.add_argument("--losses", default="all",
                    help="subset of '123', 'all' or 'none'")
    sp.add_argument("--n-min", type=float, default=1e4)
    sp.add_argument("--n-max", type=float, default=1e8)
    sp.add_argument("--n-count", type=int, default=81)
    sp.add_argument("--n-spacing", choices=("linear", "log"), default="log")
    _add_common(sp)
    sp.set_defaults(func=cmd_fig1)

    sp = sub.add_parser("fig2",
                        help="optimum squeezing along a Feshbach ramp")
    sp.add_argument("--k3-table", required=True, metavar="CSV",
                    help="table with header B_gauss,K3_m6_per_s")
    sp.add_argument("--mass", type=float, required=True, help="kg")
    sp.add_argument("--a-bg", type=float, required=True,
                    help="background scattering length, m")
    sp.add_argument("--delta-b", type=float, required=True,
                    help="resonance width, gauss")
    sp.add_argument("--b0", type=float, required=True,
                    help="resonance position, gauss")
    sp.add_argument("--k1", type=float, default=0.0)
    sp.add_argument("--k2", type=float, default=0.0)
    sp.add_argument("--eta", type=float, default=0.1)
    _add_common(sp)
    sp.set_defaults(func=cmd_fig2)

    sp = sub.add_parser("survival",
                        help="squeezing decay after the twisting is "
                             "switched off")
    sp.add_argument("--xi2-t1", type=float, default=None,
                    help="squeezing at switch-off (direct mode)")
    sp.add_argument("--n-mean-t1", type=float, default=None)
    sp.add_argument("--sx-t1", type=float, default=None)
    sp.add_argument("--gamma1", type=float, default=None)
    _add_physical(sp, required=False)
    sp.add_argument("--eta", type=float, default=0.1)
    _add_time_grid(sp, t_max=1.0, t_count=11)
    _add_common(sp)
    sp.set_defaults(func=cmd_survival)

    return parser


def _apply_config(args):
    if not args.config:
        return
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError("config %s: invalid JSON (%s)"
                             % (args.config, exc)) from None
    if not isinstance(cfg, dict):
        raise ValueError("config %s: expected a JSON object, got %s"
                         % (args.config, type(cfg).__name__))
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("func", "command", "config") or not hasattr(args, dest):
            raise ValueError("config %s: unknown key %r for command %r"
                             % (args.config, key, args.command))
        setattr(args, dest, val)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except DomainError as exc:
        print("spinsqz: domain error: %s" % exc, file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print("spinsqz: config error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("spinsqz: i/o error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
