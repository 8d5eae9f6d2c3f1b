"""Command-line front end: ``rwpart gen|partition|metrics|walk``.

Exit codes: 0 success, 1 bad input data (parse or integrity), 2 usage or
parameter validation, 3 seed selection impossible, 4 file I/O.
Every output file ``X`` gets a ``X.manifest.json`` sidecar recording the
parameters, resolved seed, timestamps and library version.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .graph import GraphError, NormalizeOptions, ParseError, generate_power_law, load_edge_list, write_edge_list
from .metrics import evaluate
from .partition import ALGORITHMS, IntegrityError, PartitionConfig, PartitionError, SeedSelectionError, partition
from .tables import build_tables, read_partition, write_partition
from .walk import ccdf, default_threads, run_walk_ensemble, write_ccdf, write_segments

log = logging.getLogger("rwpart")

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_SEEDS, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(np.random.SeedSequence().entropy)


def _manifest(out: str, command: str, params: dict, started: float, extra: dict | None = None) -> None:
    body = {
        "command": command,
        "version": __version__,
        "params": params,
        "outputs": [out],
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        body.update(extra)
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_graph(args):
    opts = NormalizeOptions(repair_orphans=args.repair_orphans, adjacency=args.adjacency)
    return load_edge_list(args.input, opts)


def cmd_gen(args) -> int:
    if args.n < 2 or args.m < 1 or args.n < args.m + 1:
        raise UsageError(f"need n >= m + 1 and m >= 1 (got n={args.n}, m={args.m})")
    started = time.time()
    seed = _resolve_seed(args.seed)
    g = generate_power_law(args.n, args.m, seed)
    write_edge_list(g, args.out)
    _manifest(args.out, "gen", {"n": args.n, "m": args.m, "seed": seed}, started)
    log.info("wrote %s (n=%d, m=%d)", args.out, g.n, g.m)
    return EXIT_OK


def cmd_partition(args) -> int:
    if args.k < 2:
        raise UsageError(f"k must be >= 2, got {args.k}")
    started = time.time()
    g = _load_graph(args)
    seed = _resolve_seed(args.seed)
    cfg = PartitionConfig(algorithm=args.algorithm, k=args.k, seed=seed)
    try:
        cfg.validate(g)
    except PartitionError as exc:
        raise UsageError(str(exc)) from None
    ps = partition(g, cfg)
    write_partition(g, ps, args.out)
    extra = {"build_time": ps.build_time, "leftover_components": ps.leftover_components}
    params = {"input": args.input, "algorithm": args.algorithm, "k": args.k, "seed": seed,
              "repair_orphans": args.repair_orphans, "adjacency": args.adjacency}
    _manifest(args.out, "partition", params, started, extra)
    log.info("%s", ps.summary())
    return EXIT_OK


def _build_time_from_manifest(path: str) -> float | None:
    try:
        with open(path + ".manifest.json", encoding="utf-8") as fh:
            return float(json.load(fh).get("build_time"))
    except (OSError, ValueError, TypeError):
        return None


def cmd_metrics(args) -> int:
    g = _load_graph(args)
    ps = read_partition(args.partition, g)
    # wall-clock time is opt-in so that reruns stay byte-identical
    build_time = _build_time_from_manifest(args.partition) if args.timing else None
    report = evaluate(g, ps, build_time=build_time)
    text = report.to_text()
    if args.out:
        started = time.time()
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _manifest(args.out, "metrics", {"input": args.input, "partition": args.partition}, started)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_walk(args) -> int:
    if args.steps < 1 or args.walkers < 1:
        raise UsageError("steps and walkers must be >= 1")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("threads must be >= 1")
    started = time.time()
    g = _load_graph(args)
    ps = read_partition(args.partition, g)
    tables = build_tables(g, ps)
    seed = _resolve_seed(args.seed)
    records = run_walk_ensemble(tables, args.walkers, args.steps, seed, threads=threads)
    seg_path, ccdf_path = args.out + ".segments.csv", args.out + ".ccdf.csv"
    write_segments(records, seg_path)
    write_ccdf(ccdf(records), ccdf_path)
    params = {"input": args.input, "partition": args.partition, "steps": args.steps,
              "walkers": args.walkers, "seed": seed, "threads": threads}
    comm = sum(r.communication_count for r in records)
    _manifest(args.out, "walk", params, started,
              {"outputs": [seg_path, ccdf_path], "jump_rate": comm / (args.steps * args.walkers)})
    log.info("jump rate %.6f over %d steps", comm / (args.steps * args.walkers), args.steps * args.walkers)
    return EXIT_OK


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="edge-list file")
    p.add_argument("--repair-orphans", action="store_true",
                   help="attach vertices that never appear as a source to a sink vertex")
    p.add_argument("--adjacency", action="store_true", help="input rows are 'u n1 n2 ...'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwpart", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a power-law graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="edges per new vertex")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="partition a graph")
    _add_graph_args(p)
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("metrics", help="evaluate a partition file")
    _add_graph_args(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--timing", action="store_true",
                   help="report build_time from the partition's manifest")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("walk", help="random walks over a partition file")
    _add_graph_args(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--steps", type=int, required=True, help="steps per walker")
    p.add_argument("--walkers", type=int, default=1)
    p.add_argument("--threads", type=int, help="default: $RWPART_THREADS or CPU count")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="prefix for .segments.csv and .ccdf.csv")
    p.set_defaults(func=cmd_walk)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rwpart {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SeedSelectionError as exc:
        print(f"rwpart {args.command}: seed selection failed: {exc}", file=sys.stderr)
        return EXIT_SEEDS
    except (ParseError, IntegrityError, GraphError, PartitionError) as exc:
        print(f"rwpart {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"rwpart {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
