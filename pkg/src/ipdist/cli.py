"""Command-line entry point.

Every subcommand prints one JSON document (``bench`` prints CSV).  Exit
status is 0 on success, 1 on bad input or an unsatisfiable request and
2 when a construction fails internally.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Callable, List, Optional

import numpy as np

from . import oracle
from .brs import BrsOutput, CliqueCover, brs_for_L, complete_brs, partial_brs, partial_brs_selfjoin
from .core import ConstructionFailure, IpdistError, PointSet, RunStats, SqInterval, make_rng
from .dfd import DfdInstance, dfd1, dfd2
from .selection import SelectionConfig, count_pairs_at_most, select_distance, select_distance_bipartite
from .udg import RspInstance, rsp


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_points(path: str) -> np.ndarray:
    """Points from a text file: one ``x y`` per line, ``#`` starts a comment line."""
    rows = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                parts = s.split()
                if len(parts) != 2:
                    raise CliError(f"{path}:{lineno}: expected two coordinates, got {len(parts)}")
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                except ValueError:
                    raise CliError(f"{path}:{lineno}: not a number") from None
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def _need(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise CliError(f"--{name.replace('_', '-')} is required for {args.command}")
    return v


def _interval(args) -> SqInterval:
    lo = 0.0 if args.lo is None else float(args.lo) ** 2
    hi = math.inf if args.hi is None else float(args.hi) ** 2
    return SqInterval(lo, hi)


def _result(value_sq: float, stats: Optional[RunStats], elapsed: Optional[float], **extra) -> dict:
    st = stats.as_dict() if stats is not None else RunStats().as_dict()
    st["time_ms"] = elapsed
    out = {"value": math.sqrt(value_sq), "value_sq": value_sq, "stats": st}
    out.update(extra)
    return out


def _timed(fn: Callable, args):
    t0 = time.perf_counter()
    v = fn()
    ms = None if args.no_timing else round((time.perf_counter() - t0) * 1000.0, 3)
    return v, ms


# ------------------------------------------------------------ subcommands


def cmd_select(args) -> dict:
    P = read_points(_need(args, "points"))
    stats = RunStats()
    cfg = SelectionConfig(count_strategy=args.strategy)
    trace: List = []
    v, ms = _timed(lambda: select_distance(P, _need(args, "k"), rng=args.seed, cfg=cfg, stats=stats, trace=trace), args)
    extra = {"trace": [[s.interval.lo, s.interval.hi] for s in trace]} if args.json_stats else {}
    return _result(v, stats, ms, **extra)


def cmd_select_bipartite(args) -> dict:
    A = read_points(_need(args, "a"))
    B = read_points(_need(args, "b"))
    stats = RunStats()
    cfg = SelectionConfig(count_strategy=args.strategy)
    v, ms = _timed(lambda: select_distance_bipartite(A, B, _need(args, "k"), rng=args.seed, cfg=cfg, stats=stats), args)
    return _result(v, stats, ms)


def cmd_count(args) -> dict:
    P = read_points(_need(args, "points"))
    sq = float(_need(args, "delta")) ** 2
    c, ms = _timed(lambda: count_pairs_at_most(P, sq, args.strategy, make_rng(args.seed)), args)
    return {"count": int(c), "value": math.sqrt(sq), "value_sq": sq, "stats": {"time_ms": ms}}


def _brs_output(args):
    I = _interval(args)
    rng = make_rng(args.seed)
    if args.points is not None:
        P = read_points(args.points)
        if args.mode != "selfjoin":
            raise CliError("--points selects the self-join; use --a/--b for other modes")
        return lambda: partial_brs_selfjoin(P, I, rng)
    A = read_points(_need(args, "a"))
    B = read_points(_need(args, "b"))
    if args.mode == "partial":
        return lambda: partial_brs(A, B, I, float(_need(args, "r")), rng)
    if args.mode == "for-L":
        return lambda: brs_for_L(A, B, I, float(_need(args, "L")), rng)
    if args.mode == "complete":
        return lambda: BrsOutput(complete_brs(A, B, I, rng), CliqueCover("pi"))
    raise CliError(f"mode {args.mode} needs --points")


def cmd_brs(args) -> dict:
    out, ms = _timed(_brs_output(args), args)
    st = dict(out.stats)
    st["time_ms"] = ms
    return {"stats": st}


def _dfd_instance(args) -> DfdInstance:
    return DfdInstance(read_points(_need(args, "a")), read_points(_need(args, "b")))


def cmd_dfd2(args) -> dict:
    inst = _dfd_instance(args)
    stats = RunStats()
    v, ms = _timed(lambda: dfd2(inst, rng=args.seed, stats=stats), args)
    return _result(v, stats, ms)


def cmd_dfd1(args) -> dict:
    inst = _dfd_instance(args)
    stats = RunStats()
    v, ms = _timed(lambda: dfd1(inst, rng=args.seed, stats=stats, L=args.L), args)
    return _result(v, stats, ms)


def _rsp_instance(args) -> RspInstance:
    P = read_points(_need(args, "points"))
    return RspInstance(P, _need(args, "s"), _need(args, "t"), _need(args, "lambda_"), args.weighted)


def cmd_rsp(args) -> dict:
    inst = _rsp_instance(args)
    stats = RunStats()
    v, ms = _timed(lambda: rsp(inst, rng=args.seed, stats=stats, L=args.L), args)
    return _result(v, stats, ms)


def cmd_oracle(args) -> dict:
    task = args.task
    if task == "kth":
        f = lambda: oracle.brute_kth(read_points(_need(args, "points")), _need(args, "k"))
    elif task == "kth-bipartite":
        f = lambda: oracle.brute_kth_bipartite(read_points(_need(args, "a")), read_points(_need(args, "b")), _need(args, "k"))
    elif task in ("dfd2", "dfd1"):
        A, B = read_points(_need(args, "a")), read_points(_need(args, "b"))
        dec = oracle.brute_dfd2 if task == "dfd2" else oracle.brute_dfd1
        f = lambda: oracle.brute_sweep(A, B, lambda v: dec(A, B, v))
    elif task == "rsp":
        P = read_points(_need(args, "points"))
        inst = RspInstance(P, _need(args, "s"), _need(args, "t"), _need(args, "lambda_"), args.weighted)
        f = lambda: oracle.brute_rsp(P, inst.s, inst.t, inst.lam, inst.weighted)
    elif task == "count":
        sq = float(_need(args, "delta")) ** 2
        P = read_points(_need(args, "points"))
        c, ms = _timed(lambda: oracle.brute_count(P, sq), args)
        return {"count": int(c), "value": math.sqrt(sq), "value_sq": sq, "stats": {"time_ms": ms}}
    else:
        raise CliError(f"unknown oracle task {task}")
    v, ms = _timed(f, args)
    return _result(v, None, ms)


def density_interval(n: int, neighbors: float = 16.0) -> SqInterval:
    """Annulus ``(delta/2, delta]`` with about ``neighbors`` points per disk of radius ``delta`` (unit square)."""
    sq = neighbors / (math.pi * n)
    return SqInterval(sq / 4.0, sq)


def cmd_bench(args, out) -> None:
    sizes = [int(s) for s in args.n.split(",") if s.strip()]
    if not sizes or min(sizes) < 2:
        raise CliError("--n needs a comma-separated list of sizes >= 2")
    if args.target == "brs":
        out.write("n,seed,gamma_edges,sum_sides,pi_pairs,millis\n")
    else:
        out.write("n,seed,k,value_sq,stages,millis\n")
    for n in sizes:
        for seed in range(args.seeds):
            rng = np.random.default_rng([args.seed, n, seed])
            P = PointSet(rng.random((n, 2)))
            t0 = time.perf_counter()
            if args.target == "brs":
                cover = complete_brs(P, P, density_interval(n), rng)
                ms = (time.perf_counter() - t0) * 1000.0
                row = [n, seed, cover.edge_count, int(cover.a_sizes.sum() + cover.b_sizes.sum()), 0]
            else:
                k = int(rng.integers(1, n * (n - 1) // 2 + 1))
                stats = RunStats()
                v = select_distance(P, k, rng=rng, stats=stats)
                ms = (time.perf_counter() - t0) * 1000.0
                row = [n, seed, k, repr(v), stats.stages]
            row.append("" if args.no_timing else f"{ms:.3f}")
            out.write(",".join(str(x) for x in row) + "\n")


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--points", help="point file (one 'x y' per line)")
    common.add_argument("--a", help="first point set or sequence file")
    common.add_argument("--b", help="second point set or sequence file")
    common.add_argument("--k", type=int, help="rank, 1-based")
    common.add_argument("--lambda", dest="lambda_", type=float, help="path budget (hops or length)")
    common.add_argument("--weighted", action="store_true", help="use Euclidean edge lengths")
    common.add_argument("--s", type=int, help="source point id (0-based)")
    common.add_argument("--t", type=int, help="target point id (0-based)")
    common.add_argument("--L", type=float, help="target candidate count for the randomized optimizer")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json-stats", action="store_true", help="add per-stage details to the output")
    common.add_argument("--no-timing", action="store_true", help="report null timings (byte-stable output)")

    p = _Parser(prog="ipdist", description="Interpoint distance optimization in the plane.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, hlp in (("select", "k-th smallest pairwise distance"),
                      ("select-bipartite", "k-th smallest cross distance")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--strategy", choices=["brute", "grid", "brs"], default="grid")
    sp = sub.add_parser("count", parents=[common], help="pairs at distance at most --delta")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--strategy", choices=["brute", "grid", "brs"], default="grid")
    sp = sub.add_parser("brs", parents=[common], help="batched range searching summary")
    sp.add_argument("--mode", choices=["partial", "selfjoin", "for-L", "complete"], default="complete")
    sp.add_argument("--lo", type=float, help="open lower distance bound (default 0)")
    sp.add_argument("--hi", type=float, help="closed upper distance bound (default inf)")
    sp.add_argument("--r", type=float, help="cutting parameter for --mode partial")
    sub.add_parser("dfd2", parents=[common], help="two-sided discrete Frechet distance with shortcuts")
    sub.add_parser("dfd1", parents=[common], help="one-sided discrete Frechet distance with shortcuts")
    sub.add_parser("rsp", parents=[common], help="reverse shortest path in a unit-disk graph")
    sp = sub.add_parser("bench", parents=[common], help="CSV timings over random instances")
    sp.add_argument("target", choices=["brs", "select"])
    sp.add_argument("--n", required=True, help="comma-separated sizes")
    sp.add_argument("--seeds", type=int, default=3)
    sp = sub.add_parser("oracle", parents=[common], help="brute-force reference answers")
    sp.add_argument("task", choices=["kth", "kth-bipartite", "count", "dfd2", "dfd1", "rsp"])
    sp.add_argument("--delta", type=float)
    return p


COMMANDS = {
    "select": cmd_select,
    "select-bipartite": cmd_select_bipartite,
    "count": cmd_count,
    "brs": cmd_brs,
    "dfd2": cmd_dfd2,
    "dfd1": cmd_dfd1,
    "rsp": cmd_rsp,
    "oracle": cmd_oracle,
}


def run(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "bench":
            cmd_bench(args, out)
            return 0
        doc = COMMANDS[args.command](args)
    except ConstructionFailure as e:
        err.write(f"ipdist: internal construction failure: {e}\n")
        return 2
    except (CliError, IpdistError, ValueError) as e:
        err.write(f"ipdist: {e}\n")
        return 1
    out.write(json.dumps(doc) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
