"""Command-line entry point.

Every subcommand writes its data files plus ``run.json`` into
``--output-dir``; ``dilationlab rerun run.json`` replays a run.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 reliability failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import operator_model as om
from .bounds import (certified_lower_bound, correction_exponent, ims_exponent,
                     ims_refinement, leading_exponent)
from .discretize import Discretization, assemble_dilated
from .errors import NumericalError, ReliabilityError
from .output import SCHEMA_VERSION, svg_plot, write_csv, write_json
from .scaling_lab import SweepPolicy, abscissa_record, fit_exponent, parse_gamma_range, sweep
from .semigroup import decay_rate, evolve
from .spectral_analysis import (containment_check, eigenvalues_of, numerical_range,
                                pseudospectrum_grid, spectrum)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RELIABILITY = 0, 2, 3, 4

# keys of the parsed namespace that are not part of the run configuration
_NOT_CONFIG = {"func", "output_dir", "command"}


class UsageError(ValueError):
    pass


def _range(text: str):
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return [lo, hi]


def _operator_args(p, theta_default=0.0, n_default=128):
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--theta", type=float, default=theta_default, help="dilation angle")
    p.add_argument("--u", type=float, default=0.0, help="real dilation parameter")
    p.add_argument("--scheme", choices=("hermite", "fd"), default="hermite")
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--box", type=float, default=None, help="FD half-width (FD only)")


def _common(p):
    p.add_argument("--output-dir", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true", help="also write an SVG plot")


def _disc(args) -> Discretization:
    if args.scheme == "hermite":
        if args.box is not None:
            raise UsageError("--box applies to --scheme fd only")
        return Discretization.hermite(args.n)
    return Discretization.fd(args.n, 10.0 if args.box is None else args.box)


def _op(args) -> om.OperatorSpec:
    return om.OperatorSpec(args.gamma, args.kappa, complex(args.u, args.theta))


def _write_run(out: Path, args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}
    write_json(out / "run.json", {
        "schema_version": SCHEMA_VERSION, "tool": "dilationlab", "version": __version__,
        "subcommand": args.command, "seed": args.seed, "config": cfg})


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_spectrum(args, out: Path):
    spec, disc = _op(args), _disc(args)
    s = spectrum(spec, disc, args.k)
    a = assemble_dilated(spec, disc)
    nr = numerical_range(a, args.angles)
    inside = containment_check(s, nr)
    write_csv(out / "spectrum.csv", ["re", "im", "reliable"],
              [(z.real, z.imag, r) for z, r in zip(s.eigenvalues, s.reliable)])
    write_json(out / "spectrum.json", {
        "schema_version": SCHEMA_VERSION, "gamma": args.gamma, "kappa": args.kappa,
        "u": args.u, "theta": args.theta, "scheme": args.scheme, "n": args.n, "k": args.k,
        "abscissa": s.abscissa, "reliable_count": s.reliable_count,
        "lowest_reliable": s.lowest_reliable, "in_numerical_range": inside,
        "numerical_range_convex": nr.is_convex()})
    if args.svg:
        b = np.append(nr.boundary, nr.boundary[:1])
        svg_plot(out / "spectrum.svg",
                 [("polygon", b.real, b.imag), ("points", s.eigenvalues.real, s.eigenvalues.imag)],
                 title=f"spectrum, gamma={args.gamma:g}, kappa={args.kappa:g}", xlabel="Re", ylabel="Im")
    return EXIT_OK


def cmd_sweep(args, out: Path):
    try:
        gammas = parse_gamma_range(args.gammas)
    except ValueError as exc:
        raise UsageError(str(exc))
    policy = SweepPolicy(n_start=args.n_start, n_cap=args.n_cap, rtol=args.rtol, k=args.k,
                         theta=args.theta)
    recs = sweep(args.kappa, gammas, policy, jobs=args.jobs)
    header = ["kappa", "gamma", "abscissa", "certified", "n_used", "reliable"]
    write_csv(out / "sweep.csv", header, [r.as_row() for r in recs])
    summary = {
        "schema_version": SCHEMA_VERSION, "kappa": args.kappa,
        "predicted_exponent": leading_exponent(args.kappa),
        "fit_window": [args.fit_lo, args.fit_hi],
        "records": len(recs), "reliable_records": sum(r.reliable for r in recs),
        "unreliable_gammas": [r.gamma for r in recs if not r.reliable],
        "certified_violations": sum(r.certified > r.abscissa * (1 + 1e-3) for r in recs),
    }
    try:
        fit = fit_exponent(recs, (args.fit_lo, args.fit_hi))
        fit_c = fit_exponent(recs, (args.fit_lo, args.fit_hi), column="certified")
    except ReliabilityError as exc:
        summary["error"] = str(exc)
        write_json(out / "fit.json", summary)
        raise
    summary.update({
        "exponent": fit.exponent, "prefactor": fit.prefactor, "r_squared": fit.r_squared,
        "gamma_range": list(fit.gamma_range), "fit_count": fit.count,
        "exponent_certified": fit_c.exponent,
        "lower_law_ok": fit.exponent >= leading_exponent(args.kappa) - 0.05})
    write_json(out / "fit.json", summary)
    if args.svg:
        g = np.array([r.gamma for r in recs if r.gamma > 0])
        ab = np.array([r.abscissa for r in recs if r.gamma > 0])
        ce = np.array([r.certified for r in recs if r.gamma > 0])
        svg_plot(out / "sweep.svg", [("line", np.log10(g), np.log10(ab)),
                                     ("line", np.log10(g), np.log10(ce))],
                 title=f"kappa={args.kappa:g}: abscissa and certified bound",
                 xlabel="log10 gamma", ylabel="log10 value")
    return EXIT_OK


def cmd_bound(args, out: Path):
    theta = om.default_theta(args.kappa) if args.theta is None else args.theta
    rep = certified_lower_bound(om.RealPartSpec(args.gamma, args.kappa, theta))
    row = rep.as_row()
    header = list(row)
    summary = {"schema_version": SCHEMA_VERSION, **row, "n": rep.n, "box": rep.box}
    if args.with_abscissa:
        rec = abscissa_record(args.kappa, args.gamma, SweepPolicy())
        row["abscissa"] = rec.abscissa
        header.append("abscissa")
        summary.update(abscissa=rec.abscissa, abscissa_reliable=rec.reliable,
                       certified_below_abscissa=rep.certified <= rec.abscissa * (1 + 1e-3))
    write_csv(out / "bound.csv", header, [row])
    write_json(out / "bound.json", summary)
    return EXIT_OK


def cmd_semigroup(args, out: Path):
    if args.u != 0 or args.theta != 0:
        raise UsageError("time evolution uses the undilated operator; omit --u/--theta")
    spec, disc = _op(args), _disc(args)
    psi0 = None
    if args.mode is not None:
        if args.scheme != "hermite" or not 0 <= args.mode < args.n:
            raise UsageError("--mode needs the Hermite scheme and 0 <= mode < n")
        psi0 = np.zeros(args.n, dtype=complex)
        psi0[args.mode] = 1.0
    run = evolve(spec, disc, psi0, t_end=args.t_end, dt=args.dt, method=args.method)
    window = args.window or [0.5 * run.t_grid[-1], run.t_grid[-1]]
    rate = decay_rate(run, tuple(window))
    write_csv(out / "semigroup.csv", ["t", "norm"], zip(run.t_grid, run.norms))
    write_json(out / "semigroup.json", {
        "schema_version": SCHEMA_VERSION, "gamma": args.gamma, "kappa": args.kappa,
        "fitted_rate": rate, "window": window, "dt": args.dt, "t_end": args.t_end,
        "method": args.method, "contractivity_violations": run.contractivity_violations})
    if args.svg:
        keep = run.norms > 0
        svg_plot(out / "semigroup.svg", [("line", run.t_grid[keep], np.log10(run.norms[keep]))],
                 title=f"gamma={args.gamma:g}, kappa={args.kappa:g}", xlabel="t",
                 ylabel="log10 ||psi(t)||")
    return EXIT_OK


def cmd_numrange(args, out: Path):
    spec, disc = _op(args), _disc(args)
    a = assemble_dilated(spec, disc)
    nr = numerical_range(a, args.angles)
    vals = eigenvalues_of(spec, disc)
    write_csv(out / "numrange.csv", ["re", "im"], [(z.real, z.imag) for z in nr.boundary])
    write_json(out / "numrange.json", {
        "schema_version": SCHEMA_VERSION, "gamma": args.gamma, "kappa": args.kappa,
        "angles": args.angles, "convex": nr.is_convex(), "norm": nr.norm,
        "contains_spectrum": containment_check(vals, nr)})
    if args.svg:
        b = np.append(nr.boundary, nr.boundary[:1])
        svg_plot(out / "numrange.svg", [("polygon", b.real, b.imag), ("points", vals.real, vals.imag)],
                 title="numerical range and spectrum", xlabel="Re", ylabel="Im")
    return EXIT_OK


def cmd_pseudo(args, out: Path):
    spec, disc = _op(args), _disc(args)
    if args.res > 200:
        raise UsageError("--res is capped at 200")
    a = assemble_dilated(spec, disc)
    grid = pseudospectrum_grid(a, args.re, args.im, args.res)
    rows = [[y, *grid.sigma[i]] for i, y in enumerate(grid.im)]
    write_csv(out / "pseudo.csv", ["im\\re"] + ["%.17g" % x for x in grid.re], rows)
    vals = eigenvalues_of(spec, disc)
    box = vals[(vals.real >= args.re[0]) & (vals.real <= args.re[1])
               & (vals.imag >= args.im[0]) & (vals.imag <= args.im[1])]
    write_json(out / "pseudo.json", {
        "schema_version": SCHEMA_VERSION, "gamma": args.gamma, "kappa": args.kappa,
        "re": args.re, "im": args.im, "resolution": args.res,
        "local_minima": [[z.real, z.imag] for z in grid.local_minima()],
        "eigenvalues_in_window": [[z.real, z.imag] for z in box]})
    if args.svg:
        mins = grid.local_minima()
        svg_plot(out / "pseudo.svg", [("points", box.real, box.imag), ("points", mins.real, mins.imag)],
                 title="eigenvalues and sigma_min minima", xlabel="Re", ylabel="Im")
    return EXIT_OK


def cmd_ims(args, out: Path):
    theta = om.default_theta(args.kappa) if args.theta is None else args.theta
    spec = om.RealPartSpec(args.gamma, args.kappa, theta)
    nu = ims_exponent(args.kappa) if args.nu is None else args.nu
    levels = ims_refinement(spec, Discretization.fd(args.n, args.box), args.refine, nu)
    rows = []
    for i, (n, h, res) in enumerate(levels):
        ratio = levels[i - 1][2] / res if i else float("nan")
        rows.append((i, n, h, res, ratio))
    write_csv(out / "ims.csv", ["level", "n", "h", "residual", "ratio"], rows)
    write_json(out / "ims.json", {
        "schema_version": SCHEMA_VERSION, "gamma": args.gamma, "kappa": args.kappa,
        "theta": theta, "nu": nu, "alpha": spec.alpha,
        "residuals": [r[3] for r in rows], "ratios": [r[4] for r in rows[1:]],
        "correction_exponent": correction_exponent(args.kappa)})
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dilationlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="lowest eigenvalues with reliability flags")
    _operator_args(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--angles", type=int, default=64)
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="abscissa over a gamma range and exponent fit")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--gammas", required=True, help="lo:hi:Nlog, lo:hi:Nlin or a comma list")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--n-start", type=int, default=100)
    p.add_argument("--n-cap", type=int, default=1200)
    p.add_argument("--rtol", type=float, default=1e-4)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--fit-lo", type=float, default=1e2)
    p.add_argument("--fit-hi", type=float, default=math.inf)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="certified lower bound cos(2 theta) lambda_0(H)")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--with-abscissa", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("semigroup", help="norm decay of exp(-tL) psi0")
    _operator_args(p, n_default=160)
    p.add_argument("--t-end", type=float, default=4.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--window", type=_range, default=None)
    p.add_argument("--mode", type=int, default=None, help="start from Hermite mode k")
    p.add_argument("--method", choices=("midpoint", "eig"), default="midpoint")
    _common(p)
    p.set_defaults(func=cmd_semigroup)

    p = sub.add_parser("numrange", help="numerical range polygon")
    _operator_args(p)
    p.add_argument("--angles", type=int, default=64)
    _common(p)
    p.set_defaults(func=cmd_numrange)

    p = sub.add_parser("pseudo", help="sigma_min(A - z) on a grid")
    _operator_args(p, n_default=100)
    p.add_argument("--re", type=_range, required=True)
    p.add_argument("--im", type=_range, required=True)
    p.add_argument("--res", type=int, default=50)
    _common(p)
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("ims", help="IMS localization residual under grid refinement")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--n", type=int, default=3200)
    p.add_argument("--box", type=float, default=8.0)
    p.add_argument("--refine", type=int, default=3)
    _common(p)
    p.set_defaults(func=cmd_ims)

    p = sub.add_parser("rerun", help="replay a run.json")
    p.add_argument("config", help="path to run.json")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=None)
    return ap


def _namespace_from_run(path: str, output_dir: str | None, parser) -> argparse.Namespace:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise UsageError(f"unsupported schema_version {data.get('schema_version')!r}")
    cmd = data["subcommand"]
    sub = parser._subparsers._group_actions[0].choices[cmd]
    args = argparse.Namespace(**{a.dest: a.default for a in sub._actions if a.dest != "help"})
    for k, v in data["config"].items():
        if k == "fit_hi" and v is None:
            v = math.inf
        setattr(args, k, v)
    args.command = cmd
    args.func = sub.get_default("func")
    args.output_dir = output_dir or str(Path(path).parent)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            args = _namespace_from_run(args.config, args.output_dir, parser)
        out = Path(args.output_dir)
        _write_run(out, args)
        return args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dilationlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReliabilityError as exc:
        print(f"dilationlab: reliability failure: {exc}", file=sys.stderr)
        return EXIT_RELIABILITY
    except NumericalError as exc:
        print(f"dilationlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"dilationlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
