"""Command-line entry point: ``annulus-sle <command> [options]``.

Every command writes CSV (header row, 17 significant digits) to ``--out`` or
stdout.  ``--config file.json`` supplies defaults whose keys mirror the flag
names (dashes become underscores); flags given on the command line win.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import coulomb_gas as cg
from . import correlations as corr
from . import loewner as lw
from . import martingale_mc as mc
from . import screening as sc
from . import special_fn as sf
from .errors import NumericalError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

SPECIAL_FUNCS = ("theta", "theta_I", "theta_tilde", "theta_deriv", "H", "H_deriv",
                 "HI", "Htilde", "zeta_pi", "zeta", "zeta_deriv")
SCREEN_METHODS = {"euler": "euler_integral", "residue": "residue",
                  "closed": "closed_form", "hyp": "hypergeometric_limit"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(rows, out):
    """Write rows (first row is the header) with 17-digit floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header, *body = rows
    w.writerow(header)
    for row in body:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


PLOT_TEMPLATE = '''"""Plot {csv} (first column against the others)."""
import csv

import matplotlib.pyplot as plt

with open({csv!r}, newline="") as fh:
    rows = list(csv.reader(fh))
header, body = rows[0], rows[1:]
x = [float(r[0]) for r in body]
for j, name in enumerate(header[1:], start=1):
    plt.plot(x, [float(r[j]) for r in body], label=name)
plt.xlabel(header[0])
plt.legend()
plt.savefig({png!r})
'''


def emit_plot_script(path, csv_path):
    png = (csv_path.rsplit(".", 1)[0] if "." in csv_path else csv_path) + ".png"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PLOT_TEMPLATE.format(csv=csv_path, png=png))


def parse_grid(text):
    """``lo:hi:n`` -> n evenly spaced values (inclusive)."""
    try:
        lo, hi, n = text.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise ValidationError(f"grid must be lo:hi:n, got {text!r}") from None
    if n < 1:
        raise ValidationError("grid needs at least one point")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def parse_complex_list(text):
    try:
        return [complex(s.replace(" ", "")) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse complex list {text!r}") from None


# --- commands ------------------------------------------------------------------------

def cmd_special(args):
    ctl = sf.SeriesControl(args.abs_tol, args.max_terms)
    rows = [("r", "re_z", "im_z", "re", "im")]
    for z in parse_complex_list(args.z):
        f = args.func
        if f == "theta":
            v = sf.theta(args.r, z, ctl)
        elif f == "theta_I":
            v = sf.theta_I(args.r, z, ctl)
        elif f == "theta_tilde":
            v = sf.theta_tilde(args.r, z, ctl)
        elif f == "theta_deriv":
            v = sf.theta_deriv(args.r, z, args.order, args.kind, ctl)
        elif f == "H":
            v = sf.loewner_kernel_H(args.r, z, ctl)
        elif f == "H_deriv":
            v = sf.loewner_kernel_H_deriv(args.r, z, args.order, ctl)
        elif f == "HI":
            v = sf.loewner_kernel_HI(args.r, z, ctl)
        elif f == "Htilde":
            v = sf.loewner_kernel_Htilde(args.r, z, ctl)
        elif f == "zeta_pi":
            v = sf.zeta_pi(args.r, ctl)
        elif f == "zeta":
            v = sf.weierstrass_zeta(args.r, z, ctl)
        else:
            v = sf.weierstrass_zeta_deriv(args.r, z, ctl)
        v = complex(v)
        rows.append((args.r, z.real, z.imag, v.real, v.imag))
    return rows


def cmd_green(args):
    zeta = complex(args.zeta)
    data = corr.green_grid(args.bc, args.r, zeta, parse_grid(args.re_grid), parse_grid(args.im_grid))
    return [("re", "im", "value")] + data


def _force(args, params):
    if not args.force:
        raise ValidationError("--force q:beta[,q:beta...] is required")
    return cg.ForceDivisor.parse(args.force, params, strict=not args.allow_non_neutral)


def cmd_partition(args):
    params = cg.SleParams(args.kappa)
    force = _force(args, params)
    rows = [("p", "Z")]
    for p in parse_grid(args.p_grid):
        rows.append((p, cg.one_leg_partition(args.bc, args.r, p, force, params)))
    return rows


def cmd_drift(args):
    params = cg.SleParams(args.kappa)
    force = _force(args, params)
    rows = [("xi", "lambda")]
    for xi in parse_grid(args.xi_grid):
        rows.append((xi, cg.drift_lambda(args.bc, args.r, xi, force, params)))
    return rows


def cmd_screen(args):
    method = SCREEN_METHODS[args.method]
    ev = sc.PartitionEvaluator(method, args.kappa, args.bc)
    rows = [("x", "Z", "pde_residual")]
    for x in parse_grid(args.x_grid):
        z = ev(args.r, x)
        res = float("nan")
        if args.check_pde:
            if method == "hypergeometric_limit":
                res = sc.degenerate_ode_residual(lambda u: sc.z_infinity(u, args.kappa), x, args.kappa)
            else:
                res = sc.null_vector_residual(ev, args.bc, args.r, x, args.kappa, args.h_x, args.h_r)
        rows.append((x, z, res))
    return rows


def cmd_sle(args):
    params = cg.SleParams(args.kappa) if args.kappa > 0 else None
    force = None
    if args.force:
        force = cg.ForceDivisor.parse(args.force, params or cg.SleParams(1.0),
                                      strict=not args.allow_non_neutral)
    rows = [("path_id", "t", "xi", "re_gamma", "im_gamma")]
    for i in range(args.paths):
        cfg = lw.DriverConfig(kappa=args.kappa, dt=args.dt, rng_seed=args.seed, path_index=i,
                              swallow_guard=args.swallow_guard)
        sample, _ = lw.run_sle(args.bc, args.r0, args.kappa, args.p, force, args.T, cfg,
                               trace_stride=args.trace_stride, eps=args.eps)
        for t, xi, g in zip(sample.times, sample.xi, sample.gamma):
            rows.append((i, t, xi, g.real, g.imag))
        if sample.stop_reason != "completed":
            print(f"path {i}: stopped ({sample.stop_reason})", file=sys.stderr)
    return rows


def cmd_martingale(args):
    pts = parse_complex_list(args.z) if args.z else None
    spec = mc.default_spec(args.kind, args.r0, pts, args.q, args.beta)
    rep = mc.martingale_test(spec, args.paths, args.T, args.dt, args.seed, args.drift_shift)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
    print("PASS" if rep.passed else "FAIL", f"max|z|={rep.max_abs_z:.3f}", file=sys.stderr)
    return rep.csv_rows()


# --- selftest ------------------------------------------------------------------------

def _selftest_checks():
    ctl = sf.DEFAULT_CONTROL
    rng = np.random.default_rng(12345)

    def special_values():
        r = 1.0
        e = max(abs(sf.loewner_kernel_H(r, math.pi)), abs(sf.loewner_kernel_H(r, 1j * r) + 1j),
                abs(sf.loewner_kernel_H(r, math.pi + 1j * r) + 1j))
        return e < 1e-11, e

    def periodicity():
        z = complex(rng.uniform(-3, 3), rng.uniform(-1, 1))
        e = abs(sf.theta(1.0, z + 2 * math.pi) + sf.theta(1.0, z)) / abs(sf.theta(1.0, z))
        return e < 1e-11, e

    def modular_constant():
        e = 0.0
        for r in (0.5, 1.0, 2.0):
            jet = sf.theta_jet(r, np.array([0.0]), 3)[:, 0].real
            e = max(e, abs(sf.zeta_pi(r, ctl) / (2 * math.pi) + jet[3] / (6 * jet[1])))
        return e < 1e-10, e

    def green_difference():
        zeta, z = 0.4 + 0.3j, 1.7 + 0.8j
        e = abs(corr.green("er", 1.0, zeta, z) - corr.green("dirichlet", 1.0, zeta, z)
                - zeta.imag * z.imag)
        return e < 1e-11, e

    def drift_vs_partition():
        params = cg.SleParams(4.0)
        force = cg.ForceDivisor.single(2.0, params)
        h = 1e-5
        fd = 4.0 * (math.log(cg.one_leg_partition("dirichlet", 1.0, 0.3 + h, force, params))
                    - math.log(cg.one_leg_partition("dirichlet", 1.0, 0.3 - h, force, params))) / (2 * h)
        lam = cg.drift_lambda("dirichlet", 1.0, 0.3, force, params)
        e = abs(fd - lam) / abs(lam)
        return e < 1e-5, e

    def table2_pde():
        ev = sc.PartitionEvaluator("closed_form", 4.0)
        e = max(sc.null_vector_residual(ev, "er", 1.0, x, 4.0) for x in (0.5, 2.0, 4.0))
        return e < 1e-6, e

    def degenerate_limit():
        xs = np.linspace(0.5, 5.5, 7)
        rat = [sc.z_infinity(x, 2.0) / sc.partition_closed_form(1.0, x, 2.0, "degenerate_table1") for x in xs]
        e = float(np.ptp(rat) / abs(np.mean(rat)))
        return e < 1e-8, e

    def inner_boundary():
        cfg = lw.DriverConfig(kappa=4.0, dt=1e-3, rng_seed=1)
        st = lw.initial_state(2.0, 0.0, {"in": math.pi + 2j}, (), cfg)
        st = lw.advance(st, cfg, 200)
        e = abs(st.tracked["in"].imag - st.r)
        return e < 1e-6, e

    def drift_coefficient():
        params = cg.SleParams(4.0)
        force = cg.ForceDivisor.single(math.pi, params)
        e = abs(cg.observable_drift_coefficient("dirichlet", 2.0, -0.3 - 0.9j, params, force))
        return e == 0.0, e

    return [
        ("H special values", special_values),
        ("theta periodicity", periodicity),
        ("modular constant", modular_constant),
        ("ER - Dirichlet Green", green_difference),
        ("drift = kappa dlogZ", drift_vs_partition),
        ("Table 2 PDE (kappa=4)", table2_pde),
        ("Z_inf vs Table 1", degenerate_limit),
        ("inner boundary Im", inner_boundary),
        ("drift coefficient zero", drift_coefficient),
    ]


def cmd_selftest(args):
    rows = [("check", "status", "value")]
    for name, fn in _selftest_checks():
        try:
            ok, val = fn()
        except Exception as exc:  # report, do not abort the table
            ok, val = False, float("nan")
            print(f"{name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        rows.append((name, "PASS" if ok else "FAIL", val))
    return rows


# --- parser --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file with defaults for this command")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.add_argument("--plot-script", help="also write a matplotlib script for the CSV")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="annulus-sle", description="Annulus SLE numerical laboratory.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("special", help="special functions")
    p.add_argument("func", choices=SPECIAL_FUNCS)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--z", default="0.5", help="comma-separated complex values")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--kind", choices=sf.KINDS, default="plain")
    p.add_argument("--abs-tol", type=float, default=1e-15)
    p.add_argument("--max-terms", type=int, default=200)
    _common(p)
    p.set_defaults(handler=cmd_special)

    p = sub.add_parser("green", help="Green's function grid")
    p.add_argument("--bc", choices=("er", "dirichlet"), default="er")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--zeta", default="3.14159+0.5j")
    p.add_argument("--re-grid", default="0:6.28:64")
    p.add_argument("--im-grid", default="0.05:0.95:19")
    _common(p)
    p.set_defaults(handler=cmd_green)

    for name, handler, gname, gdefault in (
        ("partition", cmd_partition, "--p-grid", "0.1:3:10"),
        ("drift", cmd_drift, "--xi-grid", "0.1:3:10"),
    ):
        p = sub.add_parser(name, help=f"one-leg {name}")
        p.add_argument("--bc", choices=("er", "dirichlet"), default="dirichlet")
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--kappa", type=float, default=4.0)
        p.add_argument("--force", default="3.14159:-0.7071067811865476")
        p.add_argument("--allow-non-neutral", action="store_true")
        p.add_argument(gname, default=gdefault)
        _common(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("screen", help="screening partition functions")
    p.add_argument("--kappa", type=float, required=False, default=4.0)
    p.add_argument("--bc", choices=("er", "dirichlet"), default="er")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--x-grid", default="0.3:5.9:40")
    p.add_argument("--method", choices=tuple(SCREEN_METHODS), default="closed")
    p.add_argument("--check-pde", action="store_true")
    p.add_argument("--h-x", type=float, default=1e-4)
    p.add_argument("--h-r", type=float, default=1e-4)
    _common(p)
    p.set_defaults(handler=cmd_screen)

    p = sub.add_parser("sle", help="SLE simulation")
    ssub = p.add_subparsers(dest="action", parser_class=_Parser)
    ssub.required = True
    p = ssub.add_parser("run", help="simulate traces")
    p.add_argument("--kappa", type=float, default=4.0)
    p.add_argument("--r0", type=float, default=2.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--force", default="")
    p.add_argument("--allow-non-neutral", action="store_true")
    p.add_argument("--bc", choices=("er", "dirichlet"), default="dirichlet")
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-stride", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--swallow-guard", type=float, default=1e-3)
    _common(p)
    p.set_defaults(handler=cmd_sle)

    p = sub.add_parser("martingale", help="Monte Carlo martingale test")
    p.add_argument("--kind", choices=mc.KINDS, default="one_point_boson")
    p.add_argument("--r0", type=float, default=2.0)
    p.add_argument("--z", default="", help="evaluation point(s), comma-separated")
    p.add_argument("--q", type=float, default=math.pi)
    p.add_argument("--beta", type=float, default=None, help="force charge (default -a)")
    p.add_argument("--paths", type=int, default=5000)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift-shift", type=float, default=0.0)
    p.add_argument("--json", help="also write the report as JSON")
    _common(p)
    p.set_defaults(handler=cmd_martingale)

    p = sub.add_parser("selftest", help="run the invariant suite")
    _common(p)
    p.set_defaults(handler=cmd_selftest)
    return parser


def _leaf_parser(parser, argv):
    """The subparser that handles argv (for applying config defaults)."""
    cur = parser
    for tok in argv:
        acts = [a for a in cur._actions if isinstance(a, argparse._SubParsersAction)]
        if not acts:
            break
        if tok in acts[0].choices:
            cur = acts[0].choices[tok]
    return cur


def _apply_config(parser, argv, path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    leaf = _leaf_parser(parser, argv)
    known = {a.dest for a in leaf._actions}
    bad = sorted(k.replace("-", "_") for k in cfg if k.replace("-", "_") not in known)
    if bad:
        raise ValidationError(f"unknown config keys: {', '.join(bad)}")
    leaf.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})


def dispatch(argv=None):
    """Run one command; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(parser, argv, args.config)
            args = parser.parse_args(argv)
        rows = args.handler(args)
        write_csv(rows, args.out)
        if args.plot_script:
            if args.out in (None, "-"):
                raise ValidationError("--plot-script needs --out FILE")
            emit_plot_script(args.plot_script, args.out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.command == "selftest" and any(r[1] == "FAIL" for r in rows[1:]):
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(dispatch())
