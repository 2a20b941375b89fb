"""Command-line front end.

    etrs solve FILE [--tol T] [--parallel] [--max-vertex-enum K] [--text]
    etrs check FILE
    etrs oracle FILE [--method kkt|grid] [--density D]
    etrs gap FILE
    etrs gen random --n N --m M --seed S
    etrs gen qps --q FILE
    etrs bench DIR

Exit codes: 0 success/optimal, 1 input error, 2 infeasible, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from etrs.errors import BadOption, CombinatorialBudgetExceeded, ETRSError, Infeasible, ParseError
from etrs.instances import (
    dumps, instance_to_dict, load_instance, parse_matrix, qps_instance, random_instance,
    result_to_dict,
)
from etrs.model import SolverConfig
from etrs.oracle import grid_polish, kkt_enumerate
from etrs.reduction import solve_extended
from etrs.sdpcheck import certify_tightness, check_dc, check_newdc, surrogate_solve

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3


def _config(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise BadOption("--tol must be positive")
        cfg = cfg.with_tol(args.tol)
    if getattr(args, "parallel", False):
        cfg = dataclasses.replace(cfg, parallel_facets=True)
    if getattr(args, "max_vertex_enum", None) is not None:
        if args.max_vertex_enum < 1:
            raise BadOption("--max-vertex-enum must be at least 1")
        cfg = dataclasses.replace(cfg, max_vertex_enum=args.max_vertex_enum)
    return cfg


def _vec(x):
    return [float(v) for v in x]


def _text_table(res: dict) -> str:
    rows = [
        ("status", res["status"]),
        ("value", repr(res["value"])),
        ("x", " ".join(f"{v:.12g}" for v in res["x"])),
        ("multiplier", res["multiplier"]),
        ("active_set", ",".join(map(str, res["active_set"])) or "-"),
        ("trs0_solves", res["trs0_solves"]),
        ("dc", res["dc"]),
        ("newdc", res["newdc"]),
        ("surrogate_value", res["surrogate_value"]),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def solve_file(path, cfg: SolverConfig) -> dict:
    inst = load_instance(path)
    report = solve_extended(inst, cfg)
    dc, newdc = check_dc(inst, cfg), check_newdc(inst, cfg)
    surrogate = None
    if report.optimal:
        # equal to the exact value under newdc, otherwise only a lower bound
        surrogate = surrogate_solve(inst, cfg)[0]
    return result_to_dict(report, dc=dc, newdc=newdc, surrogate_value=surrogate)


def cmd_solve(args) -> int:
    res = solve_file(args.path, _config(args))
    print(_text_table(res) if args.text else dumps(res))
    return EXIT_OK if res["status"] == "optimal" else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.path)
    rep = certify_tightness(inst, cfg)
    out = {
        "lambda_min": rep.lambda_min,
        "dc": rep.dc_holds,
        "newdc": rep.newdc_holds,
        "rank": rep.rank_bracket[0],
        "rank_bound": rep.rank_bracket[1],
        "surrogate_value": rep.surrogate_value,
        "lifted_point": None if rep.lifted_point is None else _vec(rep.lifted_point),
    }
    print(dumps(out))
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.path)
    if args.method == "kkt":
        res = kkt_enumerate(inst, cfg)
    else:
        res = grid_polish(inst, args.density, cfg)
    print(dumps({"method": res.method, "value": res.value, "x": _vec(res.x),
                 "candidates_examined": res.candidates_examined}))
    return EXIT_OK


def cmd_gap(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.path)
    report = solve_extended(inst, cfg, raise_on_infeasible=True)
    surrogate = surrogate_solve(inst, cfg)[0]
    print(dumps({"exact": report.value, "surrogate": surrogate, "gap": report.value - surrogate}))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind == "random":
        if args.n is None or args.m is None:
            raise BadOption("gen random needs --n and --m")
        inst = random_instance(args.n, args.m, args.seed)
    else:
        if args.q is None:
            raise BadOption("gen qps needs --q FILE")
        inst = qps_instance(parse_matrix(Path(args.q).read_text(encoding="utf-8")))
    print(dumps(instance_to_dict(inst)))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    folder = Path(args.dir)
    if not folder.is_dir():
        raise BadOption(f"{folder} is not a directory")
    rows = []
    for path in sorted(folder.glob("*.json")):
        t0 = time.perf_counter()
        try:
            report = solve_extended(load_instance(path), cfg)
            status, value, solves = report.status, report.value, report.trs0_solves
        except ParseError:
            status, value, solves = "parse-error", None, 0
        except CombinatorialBudgetExceeded:
            status, value, solves = "budget", None, 0
        rows.append((path.name, status, value, solves, time.perf_counter() - t0))
    print(f"{'instance':<28} {'status':<12} {'value':>22} {'trs0':>5} {'seconds':>9}")
    for name, status, value, solves, secs in rows:
        shown = "-" if value is None else repr(float(value))
        print(f"{name:<28} {status:<12} {shown:>22} {solves:>5} {secs:>9.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etrs", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--tol", type=float, default=None, help="feasibility tolerance")
        p.add_argument("--parallel", action="store_true", help="evaluate sibling facets concurrently")
        p.add_argument("--max-vertex-enum", type=int, default=None,
                       help="cap on enumerated combinations")

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("path")
    solver_flags(p)
    p.add_argument("--text", action="store_true", help="human-readable table instead of JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="rank conditions and convex surrogate")
    p.add_argument("path")
    solver_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="brute-force reference solve")
    p.add_argument("path")
    p.add_argument("--method", choices=("kkt", "grid"), default="kkt")
    p.add_argument("--density", type=int, default=50, help="grid intervals per axis")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gap", help="exact value versus convex surrogate")
    p.add_argument("path")
    solver_flags(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("gen", help="write an instance to standard output")
    p.add_argument("kind", choices=("random", "qps"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", help="JSON file holding the square matrix (qps)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="solve every *.json in a directory")
    p.add_argument("dir")
    solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CombinatorialBudgetExceeded as exc:
        print(f"etrs: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Infeasible as exc:
        print(f"etrs: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ETRSError, OSError) as exc:
        print(f"etrs: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
