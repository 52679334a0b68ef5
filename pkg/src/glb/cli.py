"""Benchmark harness: fib, uts, and bc subcommands emitting JSON/CSV reports.

Exit codes: 0 success, 1 verification failure, 2 usage error.  GLB_LOG
controls stderr verbosity: off (default), stats (aggregate table), trace
(every runtime message event).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from . import bc as bc_mod
from . import uts as uts_mod
from .bags import ListBag
from .core import (
    _STAT_FIELDS,
    GlbConfig,
    GlbResult,
    TaskQueue,
    WorkerStats,
    aggregate_stats,
    glb_run,
)
from .errors import GlbError, InvalidConfigError
from .runtime import SchedulerMode

# fib(92) is the largest Fibonacci number fitting in a signed 64-bit item.
_FIB_MAX = 92


def fib_sequential(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@njit(cache=True, nogil=True)
def _fib_block(stack, top, n, max_items, mail_flags, place):
    """Expand items off the stack top; returns (top, done, added, grow).

    Stops at max_items, on a set mail flag (checked between every n
    items), or when the stack array is full (grow=True asks the caller to
    reallocate and call again).
    """
    done = 0
    added = 0
    cap = stack.shape[0]
    while done < max_items and top > 0:
        if mail_flags[place] != 0:
            break
        chunk = max_items - done
        if chunk > n:
            chunk = n
        c = 0
        while c < chunk and top > 0:
            top -= 1
            x = stack[top]
            if x < 2:
                added += x
            else:
                if top + 2 > cap:
                    stack[top] = x
                    top += 1
                    return top, done + c, added, True
                stack[top] = x - 1
                stack[top + 1] = x - 2
                top += 2
            c += 1
        done += c
    return top, done, added, False


class FibQueue(TaskQueue):
    """Naive-recursion Fibonacci: item i expands to {i-1, i-2}, leaves add.

    Exists to exercise the engine with a huge number of tiny tasks; the
    bag is the default trailing-half list bag.
    """

    block_items = 1 << 20

    def __init__(self):
        super().__init__(ListBag(item_format="<q"))
        self.total = 0
        self._stack = np.empty(1 << 12, dtype=np.int64)

    def seed(self, n: int) -> None:
        if not 0 <= n <= _FIB_MAX:
            raise InvalidConfigError(f"fib argument must be in [0, {_FIB_MAX}], got {n}")
        self.bag.add(n)

    def process(self, n: int) -> bool:
        items = self.bag.items
        c = 0
        while c < n and items:
            x = items.pop()
            if x < 2:
                self.total += x
            else:
                items.append(x - 1)
                items.append(x - 2)
            c += 1
        self.processed += c
        return c == n

    def process_block(self, n: int, max_items: int, mail_flags, place: int) -> tuple[int, bool]:
        items = self.bag.items
        if not items:
            return 0, False
        need = len(items) + 2
        if self._stack.shape[0] < need:
            self._stack = np.empty(2 * need, dtype=np.int64)
        stack = self._stack
        stack[:len(items)] = items
        top = len(items)
        done = 0
        while True:
            top, step, added, grow = _fib_block(stack, top, n, max_items - done,
                                                mail_flags, place)
            done += step
            self.total += int(added)
            if not grow:
                break
            bigger = np.empty(stack.shape[0] * 2, dtype=np.int64)
            bigger[:top] = stack[:top]
            stack = bigger
            self._stack = bigger
        items[:] = stack[:top].tolist()
        self.processed += done
        return done, top > 0

    def result(self) -> int:
        return self.total

    def identity(self) -> int:
        return 0

    def reduce(self, a: int, b: int) -> int:
        return a + b

    def encode_bag(self, bag: ListBag) -> bytes:
        return bag.to_bytes()

    def decode_bag(self, data: bytes) -> ListBag:
        return ListBag.from_bytes(data, "<q")


def fib_root_init(n: int):
    def init(queue: FibQueue) -> None:
        queue.seed(n)

    return init


# --- reports -------------------------------------------------------------


@dataclass
class RunReport:
    benchmark: str
    params: dict
    result: object
    elapsed_s: float
    places: int
    per_place: list[dict]
    workload_mean_s: float
    workload_stddev_s: float
    teps: Optional[float] = None
    nodes_per_second: Optional[float] = None

    def to_dict(self) -> dict:
        d = {
            "benchmark": self.benchmark,
            "params": self.params,
            "result": self.result,
            "elapsed_s": self.elapsed_s,
        }
        if self.teps is not None:
            d["teps"] = self.teps
        if self.nodes_per_second is not None:
            d["nodes_per_second"] = self.nodes_per_second
        d["places"] = self.places
        d["per_place"] = self.per_place
        d["workload_mean_s"] = self.workload_mean_s
        d["workload_stddev_s"] = self.workload_stddev_s
        return d


def emit_report(report: RunReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt != "csv":
        raise InvalidConfigError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    fields = ["place", *_STAT_FIELDS, "workload_mean_s", "workload_stddev_s"]
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    totals = {"place": "total", "workload_mean_s": report.workload_mean_s,
              "workload_stddev_s": report.workload_stddev_s}
    for name in _STAT_FIELDS:
        totals[name] = 0
    for row in report.per_place:
        writer.writerow(row)
        for name in _STAT_FIELDS:
            totals[name] += row[name]
    writer.writerow(totals)
    return buf.getvalue()


def _map_checksum(scores: np.ndarray) -> str:
    """64-bit digest of the map rounded to 9 decimals; reports stay small."""
    text = "|".join(f"{x:.9f}" for x in scores)
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def _stats_rows(stats: list[WorkerStats]) -> list[dict]:
    return [s.as_dict() for s in stats]


def _log_stats(result: GlbResult) -> None:
    rep = result.report
    print(f"# places={len(result.stats)} elapsed={result.elapsed_s:.6f}s "
          f"messages={result.messages_sent} "
          f"proc_mean={rep.processing_mean_s:.6f}s proc_sd={rep.processing_stddev_s:.6f}s",
          file=sys.stderr)
    header = ["place", *_STAT_FIELDS]
    print("# " + " ".join(header), file=sys.stderr)
    for row in rep.per_place:
        print("# " + " ".join(str(row[h]) for h in header), file=sys.stderr)


def _log_trace(result: GlbResult) -> None:
    if result.trace is None:
        return
    for ev in result.trace:
        if ev[0] == "send":
            _, src, dst, seq, payload = ev
            print(f"# send {src}->{dst} seq={seq} bytes={len(payload)}", file=sys.stderr)
        else:
            _, dst, src, seq = ev
            print(f"# recv {dst}<-{src} seq={seq}", file=sys.stderr)


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glb-bench",
        description="Run the global-load-balancing benchmarks and emit a report.",
    )
    sub = parser.add_subparsers(dest="benchmark", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-P", "--places", type=int, default=1)
    common.add_argument("-w", "--random-victims", type=int, default=1)
    common.add_argument("-z", "--lifeline-dim", type=int, default=None)
    common.add_argument("-n", "--granularity", type=int, default=None,
                        help="task items per process call (default: 64; bc: 1)")
    common.add_argument("--mode", choices=["deterministic", "parallel"],
                        default="deterministic")
    common.add_argument("--sched-seed", type=int, default=0)
    common.add_argument("--timeout", type=float, default=300.0)
    common.add_argument("--verify", action="store_true",
                        help="check the result against the sequential oracle")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", default=None, help="write the report to a file")

    p_fib = sub.add_parser("fib", parents=[common], help="naive Fibonacci expansion")
    p_fib.add_argument("-N", "--number", type=int, default=30)

    p_uts = sub.add_parser("uts", parents=[common], help="unbalanced tree search")
    p_uts.add_argument("--b0", type=float, default=4.0)
    p_uts.add_argument("--seed", type=int, default=19)
    p_uts.add_argument("--depth", type=int, default=6)

    p_bc = sub.add_parser("bc", parents=[common], help="betweenness centrality")
    p_bc.add_argument("--scale", type=int, default=5)
    p_bc.add_argument("--graph-seed", type=int, default=1)
    p_bc.add_argument("--edge-factor", type=int, default=8)
    p_bc.add_argument("--rmat", default="0.8,0.05,0.05,0.1",
                      help="quadrant probabilities a,b,c,d")
    p_bc.add_argument("--baseline", choices=["static", "static-random", "glb"],
                      default="glb")
    p_bc.add_argument("--degenerate", action="store_true",
                      help="use the i<j worst-case graph instead of R-MAT")
    return parser


def _config_from(args, default_n: int) -> GlbConfig:
    n = args.granularity if args.granularity is not None else default_n
    return GlbConfig(
        places=args.places,
        random_victims=args.random_victims,
        lifeline_dim=args.lifeline_dim,
        granularity=n,
        seed=args.sched_seed,
        scheduler_mode=SchedulerMode(args.mode),
    )


def _run_fib(args, trace: bool):
    config = _config_from(args, 64)
    result = glb_run(config, lambda p: FibQueue(), fib_root_init(args.number),
                     timeout_s=args.timeout, trace=trace)
    rep = result.report
    ok = True
    if args.verify:
        expect = fib_sequential(args.number)
        ok = result.value == expect
        if not ok:
            print(f"verification failed: fib({args.number}) = {result.value}, "
                  f"expected {expect}", file=sys.stderr)
    report = RunReport(
        benchmark="fib",
        params={"N": args.number, **_param_echo(args, config)},
        result=result.value,
        elapsed_s=result.elapsed_s,
        places=config.places,
        per_place=_stats_rows(result.stats),
        workload_mean_s=rep.processing_mean_s,
        workload_stddev_s=rep.processing_stddev_s,
    )
    return report, ok, result


def _run_uts(args, trace: bool):
    config = _config_from(args, 64)
    params = uts_mod.UtsParams(args.b0, args.seed, args.depth)
    result = glb_run(config, lambda p: uts_mod.UtsQueue(params),
                     uts_mod.uts_root_init(params), timeout_s=args.timeout, trace=trace)
    rep = result.report
    ok = True
    if args.verify:
        expect = uts_mod.uts_sequential(params)
        ok = result.value == expect
        if not ok:
            print(f"verification failed: uts count {result.value}, expected {expect}",
                  file=sys.stderr)
    report = RunReport(
        benchmark="uts",
        params={"b0": args.b0, "seed": args.seed, "depth": args.depth,
                **_param_echo(args, config)},
        result=result.value,
        elapsed_s=result.elapsed_s,
        places=config.places,
        per_place=_stats_rows(result.stats),
        workload_mean_s=rep.processing_mean_s,
        workload_stddev_s=rep.processing_stddev_s,
        nodes_per_second=result.value / result.elapsed_s if result.elapsed_s > 0 else None,
    )
    return report, ok, result


def _parse_rmat(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidConfigError(f"--rmat wants four comma-separated values, got {text!r}")
    return tuple(float(p) for p in parts)


def _run_bc(args, trace: bool):
    config = _config_from(args, 1)
    if args.degenerate:
        graph = bc_mod.degenerate_graph(1 << args.scale)
        graph_params = {"degenerate": True, "scale": args.scale}
    else:
        a, b, c, dq = _parse_rmat(args.rmat)
        rp = bc_mod.RmatParams(args.scale, a, b, c, dq, args.graph_seed,
                               args.edge_factor)
        graph = bc_mod.rmat_generate(rp)
        graph_params = {"degenerate": False, "scale": args.scale,
                        "graph_seed": args.graph_seed, "edge_factor": args.edge_factor,
                        "rmat": [a, b, c, dq]}
    glb_result = None
    if args.baseline == "glb":
        scores, glb_result = bc_mod.bc_glb(graph, config, timeout_s=args.timeout)
        elapsed = glb_result.elapsed_s
        per_place = _stats_rows(glb_result.stats)
        rep = glb_result.report
        mean, sd = rep.processing_mean_s, rep.processing_stddev_s
    else:
        randomize = args.baseline == "static-random"
        t0 = time.perf_counter()
        scores, busy = bc_mod.bc_static(graph, config.places, randomize, config.seed)
        elapsed = time.perf_counter() - t0
        stats = []
        for i, b_ in enumerate(busy):
            st = WorkerStats(place=i)
            st.processing_time = b_
            st.items_processed = 0
            stats.append(st)
        # Static blocks are assigned, not stolen; only busy time is meaningful.
        agg = aggregate_stats(stats)
        per_place = agg.per_place
        mean, sd = agg.processing_mean_s, agg.processing_stddev_s
    ok = True
    if args.verify:
        expect = bc_mod.bc_sequential(graph)
        ok = bool(np.all(np.abs(scores - expect) <= 1e-9))
        if not ok:
            worst = float(np.max(np.abs(scores - expect)))
            print(f"verification failed: betweenness map off by {worst:g}",
                  file=sys.stderr)
    result_summary = {
        "top_vertices": sorted(bc_mod.top_vertices(scores)),
        "checksum": _map_checksum(scores),
    }
    report = RunReport(
        benchmark="bc",
        params={**graph_params, "baseline": args.baseline, **_param_echo(args, config)},
        result=result_summary,
        elapsed_s=elapsed,
        places=config.places,
        per_place=per_place,
        workload_mean_s=mean,
        workload_stddev_s=sd,
        teps=bc_mod.teps(graph.n_vertices, elapsed) if elapsed > 0 else None,
    )
    return report, ok, glb_result


def _param_echo(args, config: GlbConfig) -> dict:
    return {
        "places": config.places,
        "random_victims": config.random_victims,
        "lifeline_dim": config.lifeline_dim,
        "granularity": config.granularity,
        "mode": config.scheduler_mode.value,
        "sched_seed": config.seed,
    }


def parse_and_run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    log_level = os.environ.get("GLB_LOG", "off")
    if log_level not in ("off", "stats", "trace"):
        print(f"GLB_LOG must be off, stats, or trace; got {log_level!r}", file=sys.stderr)
        return 2
    trace = log_level == "trace"
    runners = {"fib": _run_fib, "uts": _run_uts, "bc": _run_bc}
    try:
        report, ok, glb_result = runners[args.benchmark](args, trace)
    except GlbError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    text = emit_report(report, args.format)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
            if not text.endswith("\n"):
                f.write("\n")
    else:
        print(text)
    if log_level != "off" and glb_result is not None:
        _log_stats(glb_result)
        if trace:
            _log_trace(glb_result)
    return 0 if ok else 1


def main() -> None:
    sys.exit(parse_and_run(sys.argv[1:]))
