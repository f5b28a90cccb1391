"""Command-line front end.

Exit status: 0 success, 1 a requested check failed, 2 malformed input,
3 a solver did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds as bd
from . import functionals as fn
from . import obstacle as ob
from .domains import (
    DEFAULT_NODES,
    Annulus,
    Ball,
    DomainError,
    Interval,
    Zero,
    domain_from_dict,
    domain_to_dict,
    is_connected,
    measure,
    potential_from_dict,
)
from .solver import (
    DIRICHLET_OUTER_NEUMANN_INNER,
    ConvergenceError,
    first_eigenpair_1d,
    first_eigenpair_radial,
    lowest_eigenvalues,
    solve_torsion_1d,
    solve_torsion_radial,
    theorem7_profile,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class InputError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def load_spec(path: str | None) -> dict:
    if path is None:
        raise InputError("--input is required for this command")
    try:
        raw = sys.stdin.read() if path == "-" else Path(path).read_text()
        obj = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("input must be a JSON object")
    return obj


def domain_and_potential(obj: dict):
    """Accept a bare domain object or {"domain": ..., "potential": ...}."""
    if "domain" in obj:
        return domain_from_dict(obj["domain"]), potential_from_dict(obj.get("potential"))
    return domain_from_dict(obj), Zero()


def parse_n_values(text: str | None, default):
    if text is None:
        return list(default)
    try:
        vals = [int(float(Fraction(t))) for t in text.replace(",", " ").split()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad --n-values: {text!r}") from exc
    if len(vals) < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
        raise InputError("--n-values must be strictly increasing")
    return vals


def _exponent(x):
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return x
    raise InputError(f"bad exponent {x!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    d, V = domain_and_potential(load_spec(args.input))
    n = args.grid_nodes
    if isinstance(d, Interval):
        v = solve_torsion_1d(d, V, n)
        e = first_eigenpair_1d(d, V, n)
    elif isinstance(d, (Ball, Annulus)):
        dd = Ball(d.m, d.R) if isinstance(d, Ball) else d
        v = solve_torsion_radial(d.m, dd, V, n)
        e = first_eigenpair_radial(d.m, dd, n_nodes=n, potential=V)
    else:
        raise DomainError(f"solve supports intervals, balls and annuli, not {type(d).__name__}")
    rows = zip(v.grid.nodes, v.values, e.eigenfunction.values)
    emit(write_csv(["coordinate", "torsion", "eigenfunction"], rows), args.output)
    summary = {"lambda1": e.lambda1, "torsion_sup": v.sup, "torsion_l1": v.l1,
               "efficiency_torsion": fn.mean_to_max(v), "efficiency_eigen": fn.mean_to_max(e.eigenfunction),
               "iterations": e.iterations}
    if args.output:
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_efficiency(args) -> int:
    d, V = domain_and_potential(load_spec(args.input))
    n = args.grid_nodes
    phi = fn.efficiency_torsion(d, V, n)
    l1, sup = fn.torsion_norms(d, V, n)
    lam = fn.first_eigenvalue(d, V, n)
    E = fn.efficiency_eigen(d, V, n) if is_connected(d) else None
    row = [json.dumps(domain_to_dict(d), sort_keys=True, separators=(",", ":")), phi, E, lam, l1, sup, measure(d)]
    emit(write_csv(["domain", "phi", "E", "lambda1", "torsion_l1", "torsion_sup", "volume"], [row]), args.output)
    return EXIT_OK


def cmd_kappa_scan(args) -> int:
    spec = load_spec(args.input)
    fam = spec.get("family")
    ns = parse_n_values(args.n_values, spec.get("n_values", [100, 1000, 10000]))
    try:
        c = float(Fraction(str(spec.get("c", 1))))
        if fam == "example1":
            rep = fn.example1_report(_exponent(spec["alpha_exp"]), c, ns, args.tol)
        elif fam == "example2":
            rep = fn.example2_report(int(spec["dim"]), _exponent(spec["alpha_exp"]),
                                     _exponent(spec["beta_exp"]), c, ns, args.tol)
        else:
            raise InputError(f"unknown family {fam!r}; use example1 or example2")
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from exc
    emit(rep.to_csv(), args.output)
    summary = {"kappa_hat": rep.kappa_hat, "classification": rep.classification.kind,
               "exponent": rep.exponent, "low_confidence": rep.low_confidence}
    text = json.dumps(summary, sort_keys=True)
    if args.output:
        Path(args.output).with_suffix(".json").write_text(text + "\n")
        print(text)
    else:
        sys.stderr.write(text + "\n")
    return EXIT_OK


def cmd_obstacle_curve(args) -> int:
    spec = load_spec(args.input) if args.input else {}
    dims = [int(m) for m in spec.get("dims", args.dims)]
    if "l_values" in spec:
        ls = [float(Fraction(str(l))) for l in spec["l_values"]]
    else:
        ls = list(np.linspace(0.0, 0.99, args.l_count))
    rows = []
    for m in dims:
        for l in ls:
            th = ob.theta_of_l(m, l)
            rows.append([m, l, ob.obstacle_c_of_l(m, l), th, ob.f_of_theta(m, th), ob.g_closed_form(m, l)])
    emit(write_csv(["m", "l", "c", "theta", "f_value", "g_closed_form"], rows), args.output)
    return EXIT_OK


def cmd_bounds(args) -> int:
    reports = bd.standard_battery(args.grid_nodes)
    tol = args.tol
    rows = []
    failed = 0
    for r in reports:
        ok = r.satisfied if tol is None else (r.slack >= -tol or not r.hypothesis)
        failed += not ok
        rows.append([r.name, r.context, r.lhs, r.rhs, r.slack, ok])
    emit(write_csv(bd.CSV_HEADER, rows), args.output)
    sys.stderr.write(f"{len(reports)} checks, {failed} failed\n")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_theorem7_scan(args) -> int:
    eps_values = [float(Fraction(t)) for t in args.eps_values.replace(",", " ").split()]
    m = args.dim
    rows = []
    ratios = []
    ok = True
    for eps in eps_values:
        prof, eig = theorem7_profile(m, eps, args.grid_nodes)
        lam1, lam2 = lowest_eigenvalues(m, Annulus(m, 1 - eps, 1.0), DIRICHLET_OUTER_NEUMANN_INNER, args.grid_nodes)
        ratio = fn.mean_to_max(prof)
        simple = lam2 - lam1 > 1e-8 * lam2
        vals = prof.values
        inner = prof.grid.nodes <= 1 - eps
        construction = (vals[-1] == 0 and np.all(vals > -1e-12)
                        and np.ptp(vals[inner]) == 0 and abs(prof.l2 - 1) < 1e-10)
        ok &= bool(simple and lam1 > 0 and construction)
        ratios.append(ratio)
        rows.append([eps, eig.lambda1, lam2, simple, ratio, prof.l2, float(vals[0])])
    order = np.argsort(eps_values)[::-1]
    increasing = all(ratios[j] > ratios[i] for i, j in zip(order, order[1:]))
    ok &= increasing
    emit(write_csv(["eps", "lambda_eps", "lambda_2", "simple", "mean_to_max", "l2_norm", "plateau_value"], rows),
         args.output)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torsionkit", description="Torsion, efficiency and localisation tools")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_input=True):
        sp.add_argument("--input", required=False, help="JSON spec file ('-' for stdin)")
        sp.add_argument("--output", help="output file (default stdout)")
        sp.add_argument("--grid-nodes", type=int, default=DEFAULT_NODES)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--n-values", default=None, help="e.g. 100,1000,10000")
        return sp

    common(sub.add_parser("solve", help="torsion function and first eigenfunction on a grid"))
    common(sub.add_parser("efficiency", help="Phi, E and lambda1 for one domain"))
    common(sub.add_parser("kappa-scan", help="finite-n localisation estimate for an example family"))
    oc = common(sub.add_parser("obstacle-curve", help="theta, c and f along the plateau radius"))
    oc.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    oc.add_argument("--l-count", type=int, default=50)
    common(sub.add_parser("bounds", help="run the standard inequality battery"))
    t7 = common(sub.add_parser("theorem7-scan", help="annulus-extended eigenfunctions on the unit ball"))
    t7.add_argument("--dim", type=int, default=2)
    t7.add_argument("--eps-values", default="0.4,0.2,0.1,0.05")
    return p


COMMANDS = {
    "solve": cmd_solve,
    "efficiency": cmd_efficiency,
    "kappa-scan": cmd_kappa_scan,
    "obstacle-curve": cmd_obstacle_curve,
    "bounds": cmd_bounds,
    "theorem7-scan": cmd_theorem7_scan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.grid_nodes < 16:
        sys.stderr.write("error: --grid-nodes must be at least 16\n")
        return EXIT_INPUT
    if args.command == "kappa-scan" and args.tol is None:
        args.tol = 0.01
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER
    except (InputError, DomainError, ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
