"""Command-line entry point: ``smnorm <command> [options]``.

Exit codes: 0 success, 1 parameter error, 2 I/O error, 3 geometry error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import math
import sys

from .core import (GeometryError, GridFunIOError, ParameterError, SmoothnessParams,
                   parse_corpus_spec, sample, validate_params)
from .geometry import FullTorus, grid_for_domain, parse_domain
from .harness import (ROUTES, compare_norms, evaluate, refinement_study, sweep, whitney_check)
from .io import atomic_write, read_config, read_gridfun, write_gridfun
from .morrey import BASES, default_ladder
from .oscillation import DegenerateBall

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_GEOMETRY = 0, 1, 2, 3

NORM_COLUMNS = ["route", "base_kind", "base", "seminorm", "total", "domain", "d", "n",
                "s", "u", "p", "q", "v", "N", "T", "R", "window_ok"]


def _float(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    return float(text)


def _add_params(ap: argparse.ArgumentParser):
    g = ap.add_argument_group("smoothness parameters")
    g.add_argument("--s", type=float, default=0.7)
    g.add_argument("--u", type=float, default=2.0)
    g.add_argument("--p", type=float, default=2.0)
    g.add_argument("--q", type=_float, default=2.0, help="fine index; 'inf' allowed")
    g.add_argument("--v", type=_float, default=2.0, help="inner exponent; 'inf' allowed")
    g.add_argument("--N", type=int, default=2, help="difference / polynomial order")
    g.add_argument("--T", type=_float, default=1.0, help="largest radius in the time sum")
    g.add_argument("--R", type=float, default=1.0, help="radius of the local-average base")
    g.add_argument("--jmin", type=int, default=0)
    g.add_argument("--jmax", type=int, default=None)


def _add_source(ap: argparse.ArgumentParser):
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--func", help="corpus spec, e.g. 'trig_mode k=1'")
    src.add_argument("--input", help="grid-function file")
    ap.add_argument("--domain", default="torus")
    ap.add_argument("--d", type=int, default=None, help="dimension (default from the domain)")
    ap.add_argument("--n", type=int, default=256, help="nodes per axis for --func")


def _params(args, d: int):
    return validate_params(SmoothnessParams(s=args.s, u=args.u, p=args.p, q=args.q, v=args.v,
                                            N=args.N, T=args.T, R=args.R, d=d))


def _domain(args):
    dom = parse_domain(args.domain, args.d)
    d = args.d or getattr(dom, "d", 1)
    return dom, d


def _function(args, dom, d):
    if args.input:
        f = read_gridfun(args.input)
        if isinstance(dom, FullTorus) and (f.grid.d != dom.d):
            dom = FullTorus(f.grid.d)
        return f, dom
    grid = grid_for_domain(dom, args.n, d)
    return sample(parse_corpus_spec(args.func), grid), dom


def _csv(columns, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _manifest(args, extra: dict) -> str:
    lines = ["# run manifest"]
    for k, v in sorted(vars(args).items()):
        if k == "handler":
            continue
        lines.append(f"args.{k} = {v}")
    for k, v in extra.items():
        lines.append(f"derived.{k} = {v}")
    return "\n".join(lines) + "\n"


def _report_row(rep, prm):
    g = rep.grid
    vals = [rep.route, rep.base_kind, repr(rep.base), repr(rep.seminorm), repr(rep.total),
            rep.domain, g["d"], g["n"]]
    vals += [repr(float(getattr(prm, k))) for k in ("s", "u", "p", "q", "v")]
    vals += [prm.N, repr(float(prm.T)), repr(float(prm.R)), int(prm.window_ok)]
    return [str(v) for v in vals]


def _derived(prm) -> dict:
    return {"lower": repr(prm.lower), "sigma_p": repr(prm.sigma_p),
            "sigma_pq": repr(prm.sigma_pq), "tau": repr(prm.tau),
            "window_ok": int(prm.window_ok)}


def cmd_norm(args) -> int:
    dom, d = _domain(args)
    f, dom = _function(args, dom, d)
    prm = _params(args, f.grid.d)
    ladder = default_ladder(f.grid, args.jmin, args.jmax)
    rep = evaluate(f, dom, prm, args.route, args.base, ladder)
    print(f"{rep.route} [{rep.base_kind}] on {rep.domain}, n={f.grid.n}: "
          f"total={rep.total:.10g} base={rep.base:.10g} seminorm={rep.seminorm:.10g}")
    if not prm.window_ok:
        print(f"note: s={prm.s} lies outside the window ({prm.lower:.4g}, {prm.N})")
    if args.out:
        atomic_write(args.out, _csv(NORM_COLUMNS, [_report_row(rep, prm)]))
        atomic_write(args.out + ".manifest", _manifest(args, _derived(prm)))
    return EXIT_OK


def cmd_compare(args) -> int:
    dom, d = _domain(args)
    f, dom = _function(args, dom, d)
    prm = _params(args, f.grid.d)
    ladder = default_ladder(f.grid, args.jmin, args.jmax)
    rec = compare_norms(f, dom, prm, args.route_a, args.route_b, args.base, ladder)
    print(f"{rec.route_a}={rec.total_a:.10g} {rec.route_b}={rec.total_b:.10g} ratio={rec.ratio}"
          f" window_ok={prm.window_ok}")
    if args.out:
        cols = ["route_a", "route_b", "total_a", "total_b", "ratio", "window_ok"]
        row = [rec.route_a, rec.route_b, repr(rec.total_a), repr(rec.total_b),
               rec.ratio if isinstance(rec.ratio, str) else
               ("" if rec.ratio is None else repr(rec.ratio)), str(int(prm.window_ok))]
        atomic_write(args.out, _csv(cols, [row]))
        atomic_write(args.out + ".manifest", _manifest(args, _derived(prm)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = read_config(args.config)
    rep = sweep(cfg.funcs, cfg.params, cfg.sizes, cfg.domain, cfg.routes, cfg.base, cfg.d,
                cfg.jmin, cfg.jmax)
    print(rep.summary())
    if args.out:
        rep.write(args.out, cfg.raw)
    return EXIT_OK


def cmd_whitney(args) -> int:
    dom, d = _domain(args)
    f, dom = _function(args, dom, d)
    res = whitney_check(f, dom, args.order, args.v)
    print(f"lhs={res.lhs:.10g} rhs={res.rhs:.10g} ratio={res.ratio:.10g}")
    if args.out:
        atomic_write(args.out, _csv(["lhs", "rhs", "ratio"],
                                    [[repr(res.lhs), repr(res.rhs), repr(res.ratio)]]))
        atomic_write(args.out + ".manifest", _manifest(args, {}))
    return EXIT_OK


def cmd_refine(args) -> int:
    dom, d = _domain(args)
    prm = _params(args, d)
    sizes = [int(t) for t in args.sizes.split(",") if t.strip()]
    res = refinement_study(parse_corpus_spec(args.func), args.route, prm, sizes, dom, args.base)
    for n, t in zip(res.sizes, res.totals):
        print(f"n={n}: total={t:.10g}")
    print("successive ratios: " + ", ".join(f"{r:.4g}" for r in res.ratios))
    if res.drift_flag:
        print("warning: the finest pair differs by more than a factor 2")
    if args.out:
        rows = [[str(n), repr(t), "" if i == 0 else repr(res.ratios[i - 1])]
                for i, (n, t) in enumerate(zip(res.sizes, res.totals))]
        atomic_write(args.out, _csv(["n", "total", "ratio_to_previous"], rows))
        atomic_write(args.out + ".manifest",
                     _manifest(args, {"drift_flag": int(res.drift_flag), **_derived(prm)}))
    return EXIT_OK


def cmd_gen(args) -> int:
    dom, d = _domain(args)
    grid = grid_for_domain(dom, args.n, d)
    f = sample(parse_corpus_spec(args.spec), grid)
    write_gridfun(f, args.out)
    print(f"wrote {args.out}: d={grid.d} n={grid.n} periodic={int(grid.periodic)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smnorm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="evaluate one quasi-norm")
    _add_source(p)
    p.add_argument("--route", choices=ROUTES, default="osc")
    p.add_argument("--base", choices=BASES, default="plain")
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_norm)

    p = sub.add_parser("compare", help="ratio of two routes")
    _add_source(p)
    p.add_argument("--route-a", choices=ROUTES, default="lp")
    p.add_argument("--route-b", choices=ROUTES, default="osc")
    p.add_argument("--base", choices=BASES, default="plain")
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("sweep", help="run a configured equivalence sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("whitney", help="global polynomial residual against differences")
    _add_source(p)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--v", type=_float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_whitney)

    p = sub.add_parser("refine", help="one function at increasing resolutions")
    p.add_argument("--func", required=True)
    p.add_argument("--domain", default="torus")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--route", choices=ROUTES, default="osc")
    p.add_argument("--base", choices=BASES, default="plain")
    p.add_argument("--sizes", default="256,512,1024")
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_refine)

    p = sub.add_parser("gen", help="sample a corpus function into a grid-function file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--domain", default="torus")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=256)
    p.set_defaults(handler=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (GeometryError, DegenerateBall) as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
