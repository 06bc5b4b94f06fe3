"""Command-line front end.

Every subcommand writes CSV or JSON to --output (default stdout).  Floats
are written in shortest round-trip form, so identical flags give
byte-identical files.  Exit codes: 0 ok, 2 usage or invalid input,
3 size guard, 4 numerical failure.

Parameters: either --lambda or --minpoly (comma-separated integer
coefficients, constant term first, e.g. "-1,-1,1" for x^2 - x - 1; lambda
is then 1/theta for its dominant root and exact arithmetic is enabled).
--config FILE supplies any flag as a JSON object keyed by flag name
(dashes or underscores); explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys

import numpy as np

from . import expansions, fourier, measure, probe, support, tree
from .errors import BRWError, InvalidParameters
from .params import ParameterSet, digit_sum_value
from .polynomial import IntPolynomial, classify
from .algebra import reduce

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_NUMERIC = 0, 2, 3, 4
_NEG_LIST = re.compile(r"-[\d.]+(,\s*-?[\d.]*)+")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


class Output:
    """Collects a table or a JSON document and writes it once."""

    def __init__(self, args):
        self.path = args.output
        self.format = args.format

    def _write(self, text: str) -> None:
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)

    def table(self, header: list[str], rows, doc: dict | None = None) -> None:
        if self.format == "json":
            recs = [dict(zip(header, r)) for r in rows]
            payload = dict(doc or {})
            payload["rows"] = recs
            self.json(payload)
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        self._write(buf.getvalue())

    def json(self, doc: dict) -> None:
        self._write(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


# -- parameter handling ----------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise InvalidParameters(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise InvalidParameters(f"expected comma-separated integers, got {text!r}") from None


def params_from(args) -> ParameterSet:
    if (args.lam is None) == (args.minpoly is None):
        raise InvalidParameters("give exactly one of --lambda and --minpoly")
    digits = _floats(args.digits)
    probs = _floats(args.probs) if args.probs else [1.0 / len(digits)] * len(digits)
    kw = dict(arity=args.arity, digits=tuple(digits), probs=tuple(probs))
    if args.minpoly is not None:
        return ParameterSet.from_minpoly(args.minpoly, **kw)
    return ParameterSet(lam=args.lam, **kw)


def _t_grid(args) -> np.ndarray:
    if args.t is not None:
        return np.array(_floats(args.t))
    if args.points < 1:
        raise InvalidParameters("--points must be >= 1")
    return np.linspace(args.t_min, args.t_max, args.points)


# -- subcommands -----------------------------------------------------------

def cmd_simulate(args, out: Output) -> None:
    p = params_from(args)
    oracle = tree.LabelOracle(args.seed, p)
    vals = tree.leaf_values(oracle, args.depth, args.mode, args.count)
    lo, hi = (args.lo, args.hi) if args.lo is not None else p.hull
    h = measure.histogram(vals, lo, hi, args.bins)
    edges = h.edges
    rows = [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(h.counts)]
    if args.format == "json":
        out.json(h.as_dict())
    else:
        out.table(["bin_lo", "bin_hi", "count"], rows)


def cmd_atoms(args, out: Output) -> None:
    p = params_from(args)
    exact = False if args.float else None
    if args.measure == "mu":
        atoms = measure.mu_n(tree.LabelOracle(args.seed, p), args.depth, exact)
    elif args.measure == "nu":
        atoms = measure.nu_n(p, args.depth, exact)
    else:
        atoms = measure.average_mu_n(p, args.depth, args.reps, args.seed)
    out.table(["position", "weight"], zip(atoms.positions, atoms.weights))


def cmd_expectation(args, out: Output) -> None:
    p = params_from(args)
    avg = measure.average_mu_n(p, args.depth, args.reps, args.seed)
    nu = measure.nu_n(p, args.depth)
    lo, hi = p.hull
    d = measure.tv_distance(avg, nu, measure.Binning(lo, hi, args.bins))
    out.json({"depth": args.depth, "reps": args.reps, "bins": args.bins, "tv_distance": d})


def cmd_prefixes(args, out: Output) -> None:
    p = params_from(args)
    exact = p.exact_available and not args.float
    res = tree.distinct_prefixes(tree.LabelOracle(args.seed, p), args.depth, exact)
    out.json({"depth": args.depth, "K": res.count, "distinct_values": len(res.values),
              "values": res.values})


def cmd_spectrum(args, out: Output) -> None:
    p = params_from(args)
    t = _t_grid(args)
    if args.of == "eta":
        v = fourier.eta_hat(p, t)
        err = np.zeros(t.shape)
    else:
        s = fourier.nu_hat(p, t, args.tol)
        v, err = s.value, s.truncation_error
    out.table(["t", "re", "im", "abs", "trunc_err"], zip(t, v.real, v.imag, np.abs(v), err))


def cmd_moments(args, out: Output) -> None:
    p = params_from(args)
    t = _t_grid(args)
    header = ["t", "closed_form", "product_lower"]
    cols = [t, np.atleast_1d(fourier.expected_mu_hat_sq(p, args.depth, t)),
            fourier._suffix_products(p, args.depth, t)[0]]
    if args.reps:
        mc = fourier.mc_mu_hat_sq(p, args.depth, t, args.reps, args.seed)
        header += ["mc_estimate", "mc_stderr"]
        cols += [mc.estimate, mc.stderr]
    if args.s is not None:
        header.append("upper_bound")
        cols.append(fourier.mu_hat_sq_upper_bound(p, args.depth, args.s, t, args.tol))
    out.table(header, zip(*cols))


def cmd_sobolev(args, out: Output) -> None:
    p = params_from(args)
    est = fourier.sobolev_norm(p, args.gamma, args.t_max, args.grid_step)
    doc = est.as_dict()
    if args.constants:
        c = fourier.sobolev_comparison_constants(p, args.gamma)
        doc.update(affine_constant=c.affine, slope_constant=c.slope)
    out.json(doc)


def cmd_classify(args, out: Output) -> None:
    poly = IntPolynomial.parse(args.poly)
    doc = classify(poly).as_dict()
    doc["polynomial"] = str(poly)
    if args.reduce:
        v = reduce(_ints(args.reduce), poly)
        doc["reduced"] = list(v.coeffs)
    if args.digit_sum is not None:
        p = ParameterSet.from_minpoly(poly)
        v = digit_sum_value(_ints(args.digit_sum), p, exact=True)
        doc["digit_sum"] = {"coeffs": list(v.coeffs), "scale": v.scale, "value": float(v)}
    out.json(doc)


def cmd_expansions(args, out: Output) -> None:
    p = params_from(args)
    if args.action == "cover":
        return cmd_cover(args, out)
    x = expansions.as_fraction(args.x) if p.exact_available or "/" in str(args.x) else float(args.x)
    exact = False if args.float else None
    if args.action == "count":
        n = expansions.count_prefixes(x, p, args.depth, exact)
        out.json({"x": str(args.x), "depth": args.depth, "count": n})
    elif args.action == "greedy":
        d = expansions.greedy(x, p, args.depth, exact)
        out.json({"x": str(args.x), "depth": args.depth, "digits": [int(v) for v in d]})
    else:
        st = expansions.ExpansionState(float(x), 0, ())
        out.json({"residual": float(x), "children": sorted(expansions.children(st, p))})


def cmd_cover(args, out: Output) -> None:
    p = params_from(args)
    L = args.L if args.L is not None else expansions.eq_star_depth(p)
    doc = {"eq_star_depth": expansions.eq_star_depth(p)}
    if L is None:
        doc.update(success=False, L=None, reason="no L with lam^2 + ... + lam^L > 1")
    else:
        doc.update(expansions.cover_check(p, L).as_dict())
    out.json(doc)


def cmd_gaps(args, out: Output) -> None:
    p = params_from(args)
    exact = False if args.float else None
    cover = support.support_cover(tree.LabelOracle(args.seed, p), args.depth, exact)
    rep = support.gaps(cover)
    doc = {"level": rep.level, "exact": cover.exact, "suppressed": rep.suppressed,
           "components": len(cover.intervals), "total_length": cover.intervals.total_length()}
    out.table(["level", "alpha", "beta", "width"], list(rep.rows()), doc)


def cmd_separation(args, out: Output) -> None:
    p = params_from(args)
    exact = False if args.float else None
    seq = support.separation_constant(p, args.depth, exact)
    floor = min(g for _, g in seq)
    doc = {"floor": floor, "gap_depth": support.gap_depth(p, floor),
           "normalized_gaps": [{"n": n, "gap": g} for n, g in seq]}
    out.json(doc)


def cmd_probe(args, out: Output) -> None:
    p = params_from(args)
    if args.probes <= 1:
        rep = probe.gap_neighborhood_probe(tree.LabelOracle(args.seed, p), args.q, args.n_max, args.ell)
        out.json(rep.as_dict())
        return
    summary, _ = probe.run_probes(p, args.q, args.n_max, args.probes, args.seed, args.ell,
                                  args.threads)
    out.json(summary.as_dict())


def cmd_gw(args, out: Output) -> None:
    depths = _ints(args.depths)
    pts = tree.survival_curve(depths, args.reps, args.seed)
    doc = {"loglog_slope": tree.loglog_slope([q for q in pts if q.depth > 0])
           if sum(q.depth > 0 for q in pts) >= 2 else None}
    out.table(["depth", "prob", "stderr"], [tuple(q) for q in pts], doc)


# -- parser ----------------------------------------------------------------

def _common(sp, model: bool = True) -> None:
    g = sp.add_argument_group("common")
    if model:
        g.add_argument("--lambda", dest="lam", type=float, help="contraction ratio in (0, 1)")
        g.add_argument("--minpoly", help='minimal polynomial of 1/lambda, e.g. "-1,-1,1"')
        g.add_argument("--digits", default="0,1", help="digit values (default 0,1)")
        g.add_argument("--probs", help="digit probabilities (default uniform)")
        g.add_argument("--arity", type=int, default=2, help="tree arity (default 2)")
    g.add_argument("--seed", type=int, default=tree.DEFAULT_SEED,
                   help=f"base seed (default {tree.DEFAULT_SEED})")
    g.add_argument("--format", choices=["csv", "json"], default="csv")
    g.add_argument("--output", "-o", help="output file (default stdout)")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker cap (results do not depend on it)")
    g.add_argument("--config", help="JSON file with flag values")


def _t_args(sp) -> None:
    sp.add_argument("--t", help="explicit comma-separated frequencies")
    sp.add_argument("--t-min", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=50.0)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--tol", type=float, default=fourier.DEFAULT_TOL)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brw", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help='leaf-value histogram; CSV "bin_lo,bin_hi,count"')
    _common(sp)
    sp.add_argument("--depth", type=int, default=20)
    sp.add_argument("--bins", type=int, default=1024)
    sp.add_argument("--mode", choices=["full", "sample"], default="full")
    sp.add_argument("--count", type=int, default=0, help="leaves drawn in sample mode")
    sp.add_argument("--lo", type=float)
    sp.add_argument("--hi", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("atoms", help='atoms of mu_n, nu_n or their seed average; CSV "position,weight"')
    _common(sp)
    sp.add_argument("--measure", choices=["mu", "nu", "mean-mu"], default="mu")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--reps", type=int, default=2000)
    sp.add_argument("--float", action="store_true", help="float deduplication even when exact is possible")
    sp.set_defaults(func=cmd_atoms)

    sp = sub.add_parser("expectation", help="TV distance between the seed average of mu_n and nu_n (JSON)")
    _common(sp)
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--reps", type=int, default=2000)
    sp.add_argument("--bins", type=int, default=1024)
    sp.set_defaults(func=cmd_expectation)

    sp = sub.add_parser("prefixes", help="distinct digit words K_n and values at level n (JSON)")
    _common(sp)
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--float", action="store_true")
    sp.set_defaults(func=cmd_prefixes)

    sp = sub.add_parser("spectrum", help='eta^ or nu^ on a grid; CSV "t,re,im,abs,trunc_err"')
    _common(sp)
    _t_args(sp)
    sp.add_argument("--of", choices=["nu", "eta"], default="nu")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("moments", help="E|mu_n^(t)|^2: closed form, Monte Carlo, upper bound (CSV)")
    _common(sp)
    _t_args(sp)
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--reps", type=int, default=0, help="Monte-Carlo replicates (0 = skip)")
    sp.add_argument("--s", type=int, help="block index of the upper bound")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("sobolev", help="truncated Sobolev norm of nu (JSON)")
    _common(sp)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=1e4)
    sp.add_argument("--grid-step", type=float)
    sp.add_argument("--constants", action="store_true", help="also report the comparison constants")
    sp.set_defaults(func=cmd_sobolev)

    sp = sub.add_parser("classify", help="Pisot / Garsia classification of a polynomial (JSON)")
    _common(sp, model=False)
    sp.add_argument("poly", help='coefficients, constant term first, e.g. "-1,-1,1"')
    sp.add_argument("--reduce", help="integer coefficients of a polynomial in theta to reduce")
    sp.add_argument("--digit-sum", help="digit indices a_1..a_n; reports theta^n sum a_j lam^j")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("expansions", help="base-lambda expansions: count, greedy, children, cover (JSON)")
    _common(sp)
    sp.add_argument("action", choices=["count", "greedy", "children", "cover"])
    sp.add_argument("--x", default="1", help="target point (rational text allowed, e.g. 1/2)")
    sp.add_argument("--depth", type=int, default=20)
    sp.add_argument("--L", type=int)
    sp.add_argument("--float", action="store_true")
    sp.set_defaults(func=cmd_expansions)

    sp = sub.add_parser("cover", help="covering condition check at depth L (JSON)")
    _common(sp)
    sp.add_argument("--L", type=int, help="cover depth (default: smallest valid)")
    sp.set_defaults(func=cmd_cover)

    sp = sub.add_parser("gaps", help='gaps of the level-n support cover; CSV "level,alpha,beta,width"')
    _common(sp)
    sp.add_argument("--depth", type=int, default=16)
    sp.add_argument("--float", action="store_true")
    sp.set_defaults(func=cmd_gaps)

    sp = sub.add_parser("separation", help="normalized separation of digit sums and gap depth (JSON)")
    _common(sp)
    sp.add_argument("--depth", type=int, default=16)
    sp.add_argument("--float", action="store_true")
    sp.set_defaults(func=cmd_separation)

    sp = sub.add_parser("probe", help="maximal vertices and 1-clusters below q (JSON)")
    _common(sp)
    sp.add_argument("--q", default="1/2", help="rational probe point")
    sp.add_argument("--n-max", type=int, default=24)
    sp.add_argument("--ell", type=int, help="gap depth (default from the separation floor)")
    sp.add_argument("--probes", type=int, default=1, help="number of independent trees")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("gw", help='critical Galton-Watson survival; CSV "depth,prob,stderr"')
    _common(sp, model=False)
    sp.add_argument("--depths", default="10,20,40,80")
    sp.add_argument("--reps", type=int, default=100000)
    sp.set_defaults(func=cmd_gw)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameters(f"cannot read config {args.config!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InvalidParameters("config must be a JSON object")
    positional = {"classify": "poly", "expansions": "action"}.get(args.command)
    defaults = ap.parse_args([args.command] + ([getattr(args, positional)] if positional else []))
    for key, val in cfg.items():
        dest = {"lambda": "lam"}.get(key, key).replace("-", "_")
        if not hasattr(args, dest):
            raise InvalidParameters(f"unknown config key {key!r} for {args.command}")
        if getattr(args, dest) == getattr(defaults, dest):
            setattr(args, dest, ",".join(map(str, val)) if isinstance(val, list) else val)
    return args


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    # a leading space keeps argparse from reading "-1,-1,1" as an option
    argv = [" " + a if _NEG_LIST.fullmatch(a) else a for a in argv]
    try:
        args = _apply_config(ap, argv)
        if getattr(args, "threads", 1) < 1:
            raise InvalidParameters("--threads must be >= 1")
        args.func(args, Output(args))
    except SystemExit as exc:
        return int(exc.code or 0)
    except BRWError as exc:
        print(f"brw: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ZeroDivisionError) as exc:
        print(f"brw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
