"""Command-line surface: qap-solve, qap-bench, bw-solve, project.

Exit codes: 0 success, 1 parse/configuration error, 2 solver flagged
non-convergence (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import io as pio
from .bandwidth import run_bi_lp
from .birkhoff import project_birkhoff
from .core import scale_instance
from .enhancements import EnhanceConfig, run_lp_cp, run_lp_cp_negprox, run_lp_negprox
from .solver import SolverConfig, run_lp

VARIANTS = ("lp", "lp-cp", "lp-negprox", "lp-cp-negprox", "l2")

_CONFIG_HELP = {
    "p": "regularizer exponent",
    "eps0": "initial smoothing offset",
    "eps_min": "smoothing floor",
    "gamma": "smoothing shrink factor",
    "sigma_minus": "negative-phase boundary for the weight continuation",
    "sigma_max": "weight cap",
    "tol": "outer vertex-proximity guard",
    "alpha0": "initial projected-gradient step",
    "theta": "line search sufficient-decrease factor",
    "delta": "backtracking ratio",
    "eta": "nonmonotone reference decay",
    "tau0_x": "initial iterate-movement tolerance",
    "tau0_f": "initial objective-change tolerance",
    "tau_min_x": "iterate-movement tolerance floor",
    "tau_min_f": "objective-change tolerance floor",
    "max_outer": "outer iteration cap",
    "max_inner": "inner iteration cap per subproblem",
    "local_search_every": "polish the iterate every this many inner steps",
    "seed": "random seed",
    "l2_mode": "quadratic-regularizer baseline (set by --variant l2)",
    "proj_tol": "projection dual-gradient tolerance",
}


def _add_config_flags(parser: argparse.ArgumentParser):
    for f in fields(SolverConfig):
        if f.name == "l2_mode":
            continue  # driven by --variant
        flag = "--" + f.name.replace("_", "-")
        kind = type(f.default)
        parser.add_argument(flag, type=kind, default=f.default,
                            help=_CONFIG_HELP.get(f.name, f.name), dest=f.name)


def _add_common(parser: argparse.ArgumentParser, with_variant=True):
    if with_variant:
        parser.add_argument("--variant", choices=VARIANTS, default="lp",
                            help="solver variant")
        parser.add_argument("--kmax", type=int, default=10,
                            help="enhancement rounds")
        parser.add_argument("--mu0", type=float, default=None,
                            help="initial proximal weight (default: instance rule)")
        parser.add_argument("--c1", type=float, default=None,
                            help="cut slack (default: one objective unit on integer data)")
    parser.add_argument("--format", choices=("json-lines", "csv"), default="json-lines",
                        help="report format")
    parser.add_argument("--out", type=str, default=None, help="report output path (default stdout)")
    parser.add_argument("--trace", type=str, default=None,
                        help="write per-iteration trace records to this path")
    _add_config_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="permlp",
        description="Lp-regularized optimization over permutation matrices",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("qap-solve", help="solve one QAPLIB instance",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    solve.add_argument("instance", type=str, help="QAPLIB .dat file")
    solve.add_argument("--obj-best", type=float, default=None,
                       help="best known objective (default: sidecar table lookup)")
    _add_common(solve)

    bench = sub.add_parser("qap-bench", help="run a directory of instances",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bench.add_argument("directory", type=str, help="directory of .dat files")
    bench.add_argument("--jobs", type=int, default=1, help="parallel instance solves")
    _add_common(bench)

    bw = sub.add_parser("bw-solve", help="bandwidth minimization on a sparse pattern",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bw.add_argument("pattern", type=str, help="Matrix Market .mtx file or edge list")
    _add_common(bw)

    proj = sub.add_parser("project", help="project a matrix onto the doubly stochastic polytope",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    proj.add_argument("matrix", type=str, nargs="?", default="-",
                      help="whitespace-separated matrix file, '-' for stdin")
    proj.add_argument("--n", type=int, default=None, help="dimension (default: inferred)")
    proj.add_argument("--proj-tol", type=float, default=1e-8, dest="proj_tol",
                      help="dual gradient tolerance")
    proj.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    return ap


def _config_from_args(args) -> SolverConfig:
    kwargs = {f.name: getattr(args, f.name) for f in fields(SolverConfig)
              if hasattr(args, f.name)}
    kwargs["l2_mode"] = getattr(args, "variant", "lp") == "l2"
    return SolverConfig(**kwargs)


def _run_variant(inst, args, cfg):
    variant = args.variant
    if variant in ("lp", "l2"):
        trace = open(args.trace, "w") if args.trace else None
        try:
            return run_lp(inst, cfg, trace=trace)
        finally:
            if trace:
                trace.close()
    ecfg = EnhanceConfig(k_max=args.kmax, mu0=args.mu0, c1=args.c1)
    runner = {"lp-cp": run_lp_cp, "lp-negprox": run_lp_negprox,
              "lp-cp-negprox": run_lp_cp_negprox}[variant]
    return runner(inst, cfg, ecfg)


def _emit(reports, args) -> None:
    text = pio.write_report(reports, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _solve_one(path_str: str, args, cfg) -> pio.Report:
    path = Path(path_str)
    a, b = pio.parse_qaplib(path.read_text())
    name = path.stem.lower()
    obj_best = getattr(args, "obj_best", None)
    if obj_best is None:
        obj_best = pio.lookup_best(name)
    inst = scale_instance(a, b, name=name, obj_best=obj_best)
    res = _run_variant(inst, args, cfg)
    return pio.report_from_result(name, args.variant, inst.n, res, obj_best,
                                  cfg.seed, asdict(cfg)), res


def cmd_qap_solve(args) -> int:
    cfg = _config_from_args(args)
    report, res = _solve_one(args.instance, args, cfg)
    _emit(report, args)
    return 0 if res.converged else 2


def cmd_qap_bench(args) -> int:
    cfg = _config_from_args(args)
    paths = sorted(str(p) for p in Path(args.directory).glob("*.dat"))
    if not paths:
        print(f"no .dat instances under {args.directory}", file=sys.stderr)
        return 1
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_worker, [(p, args, cfg) for p in paths]))
    else:
        results = [_bench_worker((p, args, cfg)) for p in paths]
    reports = [r for r, _ in results]
    _emit(reports, args)
    return 0 if all(res_conv for _, res_conv in results) else 2


def _bench_worker(job):
    path, args, cfg = job
    report, res = _solve_one(path, args, cfg)
    return report, res.converged


def cmd_bw_solve(args) -> int:
    cfg = _config_from_args(args)
    text = Path(args.pattern).read_text()
    if text.lstrip().startswith("%%MatrixMarket"):
        pattern = pio.parse_matrix_market_pattern(text)
    else:
        pattern = pio.parse_edge_list(text)
    ecfg = EnhanceConfig(k_max=args.kmax, mu0=args.mu0, c1=args.c1)
    bw, pi, steps = run_bi_lp(pattern, cfg, ecfg, args.variant)
    payload = {
        "name": Path(args.pattern).stem,
        "n": pattern.n,
        "bandwidth": bw,
        "ordering": [int(i) + 1 for i in pi],
        "steps": [{"m": s.m, "h": s.h_estimate, "certified": s.certified,
                   "solved": s.solved} for s in steps],
        "seed": cfg.seed,
    }
    text_out = json.dumps(payload) + "\n"
    if args.out:
        Path(args.out).write_text(text_out)
    else:
        sys.stdout.write(text_out)
    return 0


def cmd_project(args) -> int:
    if args.matrix == "-":
        raw = sys.stdin.read()
    else:
        raw = Path(args.matrix).read_text()
    tokens = raw.split()
    values = [float(t) for t in tokens]
    n = args.n
    if n is None:
        root = int(round(len(values) ** 0.5))
        if root * root == len(values):
            n = root
        elif len(values) >= 1 and int(values[0]) ** 2 == len(values) - 1:
            n = int(values[0])
            values = values[1:]
        else:
            print("cannot infer matrix dimension; pass --n", file=sys.stderr)
            return 1
    elif len(values) == n * n + 1 and int(values[0]) == n:
        values = values[1:]
    if len(values) != n * n:
        print(f"expected {n * n} entries, got {len(values)}", file=sys.stderr)
        return 1
    c = np.array(values).reshape(n, n)
    res = project_birkhoff(c, args.proj_tol)
    out = "\n".join(" ".join(f"{v:.12g}" for v in row) for row in res.x) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return 0 if res.converged else 2


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; the contract here is 1
        return 0 if exc.code == 0 else 1
    handlers = {
        "qap-solve": cmd_qap_solve,
        "qap-bench": cmd_qap_bench,
        "bw-solve": cmd_bw_solve,
        "project": cmd_project,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
