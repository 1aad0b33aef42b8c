"""Command-line front end.

Every command prints one document on stdout: CSV (12 significant digits) or
JSON (full precision).  Exit status is 0 on success, 1 for bad flags or domain
errors, 2 when parameters violate a hypothesis of the result being computed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import domination as dom
from . import finite_oracle as fo
from . import fuzzy_potts as fz
from .errors import PreconditionError, TreedomError
from .ising_tree import (
    ModelParams,
    TANGENCY_TOL,
    ROOT_TOL,
    critical_coupling,
    h_star,
    solve_fixed_points,
    stationary,
    t_extreme,
    t_star,
    transition_matrix,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _flatten(prefix: str, value, out: list) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, value))


def _check_finite(doc) -> None:
    flat: list = []
    _flatten("", doc, flat)
    for key, v in flat:
        if isinstance(v, float) and not math.isfinite(v):
            raise TreedomError(f"non-finite output {key}={v}")


def run_result(command: str, params: dict, outputs: dict, tolerances: dict | None = None) -> dict:
    doc = {
        "command": command,
        "params": params,
        "outputs": outputs,
        "tolerances": tolerances or {},
        "version": __version__,
    }
    _check_finite(doc)
    return doc


def _emit_result(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    rows: list = []
    _flatten("", doc, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in rows:
        w.writerow([k, _fmt(v)])
    return buf.getvalue()


def _emit_table(header: list[str], rows: list[list], fmt: str) -> str:
    for row in rows:
        for v in row:
            if isinstance(v, float) and not math.isfinite(v):
                raise TreedomError(f"non-finite value in row {row}")
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_fixpoints(args) -> str:
    sol = solve_fixed_points(ModelParams(args.d, args.J, args.h))
    doc = run_result(
        "fixpoints",
        {"d": args.d, "J": args.J, "h": args.h},
        {
            "class": sol.kind.value,
            "roots": list(sol.roots),
            "residuals": list(sol.residuals),
            "h_star": h_star(args.d, args.J),
            "t_star": t_star(args.d, args.J),
        },
        {"tangency": TANGENCY_TOL, "root": ROOT_TOL},
    )
    return _emit_result(doc, args.format)


def _linspace(lo: float, hi: float, steps: int) -> list[float]:
    if steps < 2:
        raise UsageError("steps must be >= 2")
    if not hi > lo:
        raise UsageError("range must satisfy min < max")
    return [float(x) for x in np.linspace(lo, hi, steps)]


def cmd_hstar_curve(args) -> str:
    if args.J_min <= 0:
        raise UsageError("--J-min must be positive")
    rows = [[J, h_star(args.d, J), t_star(args.d, J)] for J in _linspace(args.J_min, args.J_max, args.steps)]
    return _emit_table(["J", "h_star", "t_star"], rows, args.format or "csv")


def cmd_threshold(args) -> str:
    kind = args.kind.replace("−", "-")
    which = dom.PLUS if kind.endswith("+") else dom.MINUS
    fn = dom.f_threshold if kind.startswith("f") else dom.g_threshold
    th = fn(args.J1, args.J2, args.h1, which, args.d)
    lo, hi = dom.envelope_bounds(args.J1, args.J2, args.h1, args.d + 1)
    doc = run_result(
        "threshold",
        {"kind": kind, "d": args.d, "J1": args.J1, "J2": args.J2, "h1": args.h1},
        {
            "value": th.value,
            "attained": th.attained,
            "branch": th.branch,
            "tau": dom.tau(args.J1, args.J2, args.h1, which, args.d),
            "bounds": {"lo": lo, "hi": hi},
        },
        {"branch": dom.BRANCH_TOL},
    )
    return _emit_result(doc, args.format)


def _branch_curve(fn, args) -> str:
    rows = []
    for t in _linspace(args.t_min, args.t_max, args.steps):
        th = fn(args.d, args.J2, t)
        rows.append([t, th.value, th.branch])
    return _emit_table(["t", "value", "branch"], rows, args.format or "csv")


def cmd_psi_curve(args) -> str:
    return _branch_curve(dom.psi, args)


def cmd_theta_curve(args) -> str:
    return _branch_curve(dom.theta, args)


def cmd_dominates(args) -> str:
    c1 = dom.ChainSpec(args.d, args.J1, args.h1, args.sign1)
    c2 = dom.ChainSpec(args.d, args.J2, args.h2, args.sign2)
    verdict = dom.chain_dominates(c1, c2)
    doc = run_result(
        "dominates",
        {"d": args.d, "J1": args.J1, "h1": args.h1, "sign1": args.sign1,
         "J2": args.J2, "h2": args.h2, "sign2": args.sign2},
        {
            "dominates": verdict,
            "t1": c1.t,
            "t2": c2.t,
            "abs_J_diff": abs(args.J1 - args.J2),
            "margin": c1.t - c2.t - abs(args.J1 - args.J2),
            "P1": {"p_mp": c1.matrix.p_mp, "p_pp": c1.matrix.p_pp},
            "P2": {"p_mp": c2.matrix.p_mp, "p_pp": c2.matrix.p_pp},
        },
    )
    return _emit_result(doc, args.format)


def cmd_fuzzy(args) -> str:
    params = fz.FuzzyParams(args.q, args.J, args.r, args.d)
    p_in = {"q": args.q, "J": args.J, "r": args.r, "d": args.d}
    sub = args.sub
    if sub in ("witness", "certify") and not params.regime:
        raise PreconditionError(f"requires e^(2J) >= q - 2 (e^(2J)={params.w:.6g}, q={args.q})")
    if sub == "threshold":
        P = fz.free_chain(params)
        out = {
            "threshold": fz.free_product_threshold(params),
            "P": {"p_mm": P.p_mm, "p_mp": P.p_mp, "p_pm": P.p_pm, "p_pp": P.p_pp},
        }
    elif sub == "ratios":
        rp = fz.ratios(params)
        rb = fz.rate_bounds(params, rp)
        out = {
            "c": rp.c, "b": rp.b, "a": rp.a,
            "phase_unique": fz.phase_unique(params),
            "sum_of_bases": rb.sum_of_bases,
            "exact_rate": rb.exact_rate,
            "simplified_bound": rb.simplified_bound,
            "sum_exceeds_one": rb.sum_exceeds_one,
        }
    elif sub == "witness":
        iv = fz.witness_p(params)
        out = {"empty": iv.empty, "lo_open": iv.lo, "hi_closed": iv.hi,
               "phase_unique": fz.phase_unique(params)}
    else:
        if args.p is None:
            raise UsageError("fuzzy certify needs --p")
        p_in["p"] = args.p
        out = {
            "certificate": fz.nondomination_certificate(params, args.p),
            "strict_certificate": fz.strict_nondomination_certificate(params, args.p),
            "free_dominates": args.p <= fz.free_product_threshold(params),
        }
    return _emit_result(run_result(f"fuzzy {sub}", p_in, out), args.format)


def _ising_chain_dist(tree, d, J, h, sign):
    t = t_extreme(ModelParams(d, J, h), sign)
    P = transition_matrix(J, t)
    return P, fo.chain_distribution(tree, P, stationary(P))


def cmd_oracle(args) -> str:
    sub = args.sub
    if sub == "dominates":
        tree = fo.build_tree(args.d, args.depth)
        _, D1 = _ising_chain_dist(tree, args.d, args.J1, args.h1, args.sign1)
        _, D2 = _ising_chain_dist(tree, args.d, args.J2, args.h2, args.sign2)
        flow = fo.coupling_flow(D1, D2)
        analytic = dom.chain_dominates(
            dom.ChainSpec(args.d, args.J1, args.h1, args.sign1),
            dom.ChainSpec(args.d, args.J2, args.h2, args.sign2),
        )
        params = {"d": args.d, "depth": args.depth, "J1": args.J1, "h1": args.h1, "sign1": args.sign1,
                  "J2": args.J2, "h2": args.h2, "sign2": args.sign2}
        out = {"finite_dominates": flow >= 1.0 - fo.FLOW_TOL, "flow": flow, "analytic_dominates": analytic,
               "vertices": tree.n}
    elif sub == "product":
        tree = fo.build_tree(args.d, args.depth)
        if args.q is not None:
            P = fz.free_chain(fz.FuzzyParams(args.q, args.J, args.r, args.d))
            D = fo.chain_distribution(tree, P, stationary(P))
            params = {"d": args.d, "depth": args.depth, "q": args.q, "J": args.J, "r": args.r, "p": args.p}
        else:
            P, D = _ising_chain_dist(tree, args.d, args.J, args.h, args.sign)
            params = {"d": args.d, "depth": args.depth, "J": args.J, "h": args.h, "sign": args.sign, "p": args.p}
        out = {"finite_dominates": fo.product_dominates_exact(D, args.p),
               "analytic_dominates": P.p_mp >= args.p, "P_minus_plus": P.p_mp, "vertices": tree.n}
    elif sub == "ratio":
        exact = fo.potts_subtree_ratio_exact(args.q, args.J, args.d, args.depth)
        c = fz.subtree_ratio(fz.FuzzyParams(args.q, args.J, 1, args.d))
        params = {"q": args.q, "J": args.J, "d": args.d, "depth": args.depth}
        out = {"finite_ratio": exact, "analytic_c": c, "abs_diff": abs(exact - c)}
    elif sub == "rate":
        fp = fz.FuzzyParams(args.q, args.J, args.r, args.d)
        rate = fo.all_minus_rate(args.q, args.J, args.r, args.d, args.depth)
        rb = fz.rate_bounds(fp, fz.ratios(fp))
        params = {"q": args.q, "J": args.J, "r": args.r, "d": args.d, "depth": args.depth}
        out = {"finite_rate": rate, "exact_rate": rb.exact_rate, "abs_diff": abs(rate - rb.exact_rate)}
    else:
        tree = fo.build_tree(args.d, args.depth, cap=100_000)
        res = fo.gibbs_sample(tree, args.J, args.h, args.boundary, args.sweeps, args.seed)
        params = {"d": args.d, "depth": args.depth, "J": args.J, "h": args.h, "boundary": args.boundary,
                  "sweeps": args.sweeps, "seed": args.seed}
        out = {"root_plus": float(res.mean_plus[0]), "root_stderr": float(res.stderr[0]),
               "mean_plus_all": float(res.mean_plus.mean()), "vertices": tree.n}
        if args.boundary in ("plus", "minus") and args.J > 0:
            t = t_extreme(ModelParams(args.d, args.J, args.h), args.boundary)
            out["analytic_root_plus"] = stationary(transition_matrix(args.J, t)).prob_plus
    return _emit_result(run_result(f"oracle {sub}", params, out), args.format)


# ---------------------------------------------------------------------------
# parser


def _pos_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treedom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    F = _pos_float

    def fmt(sp, default=None):
        sp.add_argument("--format", choices=["csv", "json"], default=default)

    s = sub.add_parser("fixpoints", help="roots of t = h + d*phi(J, t)")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--J", type=F, required=True)
    s.add_argument("--h", type=F, required=True)
    fmt(s, "json")
    s.set_defaults(func=cmd_fixpoints)

    s = sub.add_parser("hstar-curve", help="CSV of J, h_star, t_star")
    s.add_argument("--d", type=int, default=4)
    s.add_argument("--J-min", dest="J_min", type=F, required=True)
    s.add_argument("--J-max", dest="J_max", type=F, required=True)
    s.add_argument("--steps", type=int, default=101)
    fmt(s)
    s.set_defaults(func=cmd_hstar_curve)

    s = sub.add_parser("threshold", help="domination thresholds f+, f-, g+, g-")
    s.add_argument("kind", choices=["f+", "f-", "g+", "g-"])
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--J1", type=F, required=True)
    s.add_argument("--J2", type=F, required=True)
    s.add_argument("--h1", type=F, required=True)
    fmt(s, "json")
    s.set_defaults(func=cmd_threshold)

    for name, func in (("psi-curve", cmd_psi_curve), ("theta-curve", cmd_theta_curve)):
        s = sub.add_parser(name, help=f"CSV of t, value, branch for {name.split('-')[0]}")
        s.add_argument("--d", type=int, default=4)
        s.add_argument("--J2", type=F, required=True)
        s.add_argument("--t-min", dest="t_min", type=F, default=-20.0)
        s.add_argument("--t-max", dest="t_max", type=F, default=20.0)
        s.add_argument("--steps", type=int, default=401)
        fmt(s)
        s.set_defaults(func=func)

    s = sub.add_parser("dominates", help="domination between two extremal Ising states")
    s.add_argument("--d", type=int, required=True)
    for k in ("1", "2"):
        s.add_argument(f"--J{k}", type=F, required=True)
        s.add_argument(f"--h{k}", type=F, required=True)
        s.add_argument(f"--sign{k}", choices=["plus", "minus"], default="plus")
    fmt(s, "json")
    s.set_defaults(func=cmd_dominates)

    s = sub.add_parser("fuzzy", help="fuzzy Potts quantities on the tree")
    s.add_argument("sub", choices=["threshold", "ratios", "witness", "certify"])
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--J", type=F, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--p", type=F)
    fmt(s, "json")
    s.set_defaults(func=cmd_fuzzy)

    s = sub.add_parser("oracle", help="exact finite-tree checks")
    s.add_argument("sub", choices=["dominates", "product", "ratio", "rate", "sample"])
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--depth", type=int, default=1)
    s.add_argument("--J", type=F, default=1.0)
    s.add_argument("--h", type=F, default=0.0)
    s.add_argument("--sign", choices=["plus", "minus"], default="plus")
    s.add_argument("--J1", type=F, default=1.0)
    s.add_argument("--h1", type=F, default=0.0)
    s.add_argument("--sign1", choices=["plus", "minus"], default="plus")
    s.add_argument("--J2", type=F, default=1.0)
    s.add_argument("--h2", type=F, default=0.0)
    s.add_argument("--sign2", choices=["plus", "minus"], default="plus")
    s.add_argument("--q", type=int)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--p", type=F, default=0.5)
    s.add_argument("--boundary", choices=["plus", "minus", "free"], default="plus")
    s.add_argument("--sweeps", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    fmt(s, "json")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "sub", None) in ("ratio", "rate") and args.q is None:
            raise UsageError("--q is required")
        out = args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except PreconditionError as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return 2
    except TreedomError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
