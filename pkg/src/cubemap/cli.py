"""Command-line surface.

Subcommands: topo gen | topo label | topo check, map identity|greedy-min|
greedy-allc, partition grow, enhance, eval, bench. Results are printed as
JSON on stdout (or written with -o); mapping/partition/graph artifacts go
to their --out-* paths. Exit codes: 0 success, 1 usage error, 2 domain
error (the error JSON, including any witness, goes to stderr).

Outputs that depend only on (inputs, seed) are byte-stable; wall-clock
times are confined to trace files and bench reports. CUBEMAP_SEED sets the
default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .errors import CubemapError
from .graph import (
    Graph,
    Partition,
    bfs_all_pairs,
    contract_blocks,
    generate_topology,
    parse_metis,
    parse_topology_spec,
    read_mapping,
    read_partition,
    serialize_metis,
    write_mapping,
    write_partition,
)
from .labels import extend_labels
from .mapping import (
    greedy_allc,
    greedy_min,
    grow_partition,
    identity_mapping,
    mapping_from_assignment,
)
from .objective import achieved_balance, coco_from_distances, edge_cut, evaluate
from .pcube import NotPartialCubeError, label_partial_cube, labeling_to_json
from .timer import TimerConfig, run_timer


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, path: str | None) -> None:
    _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", path)


def _default_seed() -> int:
    return int(os.environ.get("CUBEMAP_SEED", "0"))


def _load_graph(path: str) -> Graph:
    return parse_metis(Path(path).read_text())


def _load_topology(spec_str: str):
    spec = parse_topology_spec(spec_str)
    gp = generate_topology(spec)
    return spec, gp


def _labeled_topology(spec_str: str):
    spec, gp = _load_topology(spec_str)
    return spec, gp, label_partial_cube(gp)


# --- subcommands ---


def _cmd_topo_gen(args) -> int:
    _, gp = _load_topology(args.spec)
    _emit(serialize_metis(gp), args.output)
    return 0


def _cmd_topo_label(args) -> int:
    _, gp, lab = _labeled_topology(args.spec)
    _emit_json(labeling_to_json(gp, lab), args.output)
    return 0


def _cmd_topo_check(args) -> int:
    spec, gp = _load_topology(args.spec)
    try:
        lab = label_partial_cube(gp)
    except NotPartialCubeError as exc:
        _emit_json(
            {
                "topology": str(spec),
                "partial_cube": False,
                "reason": exc.reason.value,
                "witness": list(exc.witness),
            },
            args.output,
        )
        return 2
    _emit_json(
        {"topology": str(spec), "partial_cube": True, "dim": lab.dim, "n": lab.n},
        args.output,
    )
    return 0


def _cmd_map(args) -> int:
    ga = _load_graph(args.graph)
    _, gp, lab = _labeled_topology(args.topology)
    part = read_partition(Path(args.partition).read_text(), k=lab.n)
    if args.method == "identity":
        mapping = identity_mapping(part, lab)
    else:
        gc = contract_blocks(ga, part)
        dist = bfs_all_pairs(gp)
        build = greedy_allc if args.method == "greedy-allc" else greedy_min
        mapping = mapping_from_assignment(part, build(gc, dist))
    if len(mapping) != ga.n:
        raise CubemapError("partition does not cover the graph")
    _emit(write_mapping(mapping), args.output)
    return 0


def _cmd_partition_grow(args) -> int:
    ga = _load_graph(args.graph)
    seed = args.seed if args.seed is not None else _default_seed()
    part = grow_partition(ga, args.blocks, args.eps, random.Random(seed))
    _emit(write_partition(part), args.output)
    return 0


def _cmd_enhance(args) -> int:
    ga = _load_graph(args.graph)
    spec, gp, lab = _labeled_topology(args.topology)
    mapping = read_mapping(Path(args.mapping).read_text())
    if len(mapping) != ga.n:
        raise CubemapError(
            f"mapping covers {len(mapping)} vertices, graph has {ga.n}"
        )
    seed = args.seed if args.seed is not None else _default_seed()
    cfg = TimerConfig(n_hierarchies=args.hierarchies, seed=seed)
    dist = bfs_all_pairs(gp)
    before_coco = coco_from_distances(ga, mapping, dist)
    before_cut = edge_cut(ga, Partition(np.asarray(mapping), lab.n))
    enhanced, _, trace = run_timer(ga, lab, mapping, cfg)
    report = {
        "topology": str(spec),
        "n": ga.n,
        "m": ga.m,
        "hierarchies": cfg.n_hierarchies,
        "seed": seed,
        "accepted": sum(1 for t in trace if t.accepted),
        "swaps": sum(t.swaps for t in trace),
        "coco_before": before_coco,
        "coco_after": coco_from_distances(ga, enhanced, dist),
        "cut_before": before_cut,
        "cut_after": edge_cut(ga, Partition(np.asarray(enhanced), lab.n)),
    }
    if args.out_mapping:
        Path(args.out_mapping).write_text(write_mapping(enhanced))
    else:
        report["mapping"] = enhanced
    if args.trace:
        lines = [json.dumps(t.to_dict(), sort_keys=True) for t in trace]
        Path(args.trace).write_text("\n".join(lines) + ("\n" if lines else ""))
    _emit_json(report, args.output)
    return 0


def _cmd_eval(args) -> int:
    ga = _load_graph(args.graph)
    spec, gp, lab = _labeled_topology(args.topology)
    mapping = read_mapping(Path(args.mapping).read_text())
    if len(mapping) != ga.n:
        raise CubemapError(
            f"mapping covers {len(mapping)} vertices, graph has {ga.n}"
        )
    ls = extend_labels(ga, mapping, lab, random.Random(0), allow_empty_pes=True)
    value = evaluate(ga, ls, lab.n)
    part = Partition(np.asarray(mapping), lab.n)
    _emit_json(
        {
            "topology": str(spec),
            "n": ga.n,
            "m": ga.m,
            "coco": value.coco,
            "div": value.div,
            "coco_plus": value.coco_plus,
            "edge_cut": value.edge_cut,
            "balance_eps": achieved_balance(part),
        },
        args.output,
    )
    return 0


def _cmd_bench(args) -> int:
    spec, gp, lab = _labeled_topology(args.topology)
    dist = bfs_all_pairs(gp)
    seed = args.seed if args.seed is not None else _default_seed()
    baselines = args.baseline_seconds or []
    if baselines and len(baselines) != len(args.graph):
        raise UsageError("--baseline-seconds must be given once per --graph")
    records = []
    for i, path in enumerate(args.graph):
        records.extend(
            bench_mod.run_instance(
                Path(path).stem,
                _load_graph(path),
                spec,
                lab,
                dist,
                method=args.method,
                repeats=args.repeats,
                hierarchies=args.hierarchies,
                eps=args.eps,
                seed=seed,
                baseline_seconds=baselines[i] if baselines else None,
            )
        )
    report = bench_mod.aggregate(records, repeats=args.repeats)
    if args.csv:
        Path(args.csv).write_text(bench_mod.csv_report(report))
    _emit_json(
        {
            "topology": str(spec),
            "method": args.method,
            "runs": [r.to_dict() for r in records],
            "aggregate": report.to_dict(),
        },
        args.output,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cubemap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    topo = sub.add_parser("topo", help="generate, label, or check a topology")
    topo_sub = topo.add_subparsers(dest="topo_command", required=True)
    for name, func, hlp in (
        ("gen", _cmd_topo_gen, "write the topology as a METIS graph"),
        ("label", _cmd_topo_label, "write the labeled-topology JSON"),
        ("check", _cmd_topo_check, "report whether the topology is labelable"),
    ):
        p = topo_sub.add_parser(name, help=hlp)
        p.add_argument("spec", help="e.g. grid2d:16x16, torus3d:8x8x8, hypercube:8, file:g.graph")
        p.add_argument("-o", "--output")
        p.set_defaults(func=func)

    mp = sub.add_parser("map", help="build an initial mapping from a partition")
    mp.add_argument("method", choices=("identity", "greedy-min", "greedy-allc"))
    mp.add_argument("--graph", required=True)
    mp.add_argument("--partition", required=True)
    mp.add_argument("--topology", required=True)
    mp.add_argument("-o", "--output")
    mp.set_defaults(func=_cmd_map)

    part = sub.add_parser("partition", help="built-in partitioner")
    part_sub = part.add_subparsers(dest="partition_command", required=True)
    grow = part_sub.add_parser("grow", help="BFS-grown balanced partition")
    grow.add_argument("--graph", required=True)
    grow.add_argument("--blocks", type=int, required=True)
    grow.add_argument("--eps", type=float, default=0.03)
    grow.add_argument("--seed", type=int, default=None)
    grow.add_argument("-o", "--output")
    grow.set_defaults(func=_cmd_partition_grow)

    enh = sub.add_parser("enhance", help="improve a mapping")
    enh.add_argument("--graph", required=True)
    enh.add_argument("--topology", required=True)
    enh.add_argument("--mapping", required=True)
    enh.add_argument("--hierarchies", type=int, default=50)
    enh.add_argument("--seed", type=int, default=None)
    enh.add_argument("--out-mapping", help="write the enhanced mapping here")
    enh.add_argument("--trace", help="write per-hierarchy JSONL here")
    enh.add_argument("-o", "--output")
    enh.set_defaults(func=_cmd_enhance)

    ev = sub.add_parser("eval", help="metrics of a mapping")
    ev.add_argument("--graph", required=True)
    ev.add_argument("--topology", required=True)
    ev.add_argument("--mapping", required=True)
    ev.add_argument("-o", "--output")
    ev.set_defaults(func=_cmd_eval)

    bn = sub.add_parser("bench", help="repeated-run benchmark harness")
    bn.add_argument("--graph", action="append", required=True)
    bn.add_argument("--topology", required=True)
    bn.add_argument("--method", choices=("identity", "greedy-min", "greedy-allc"), default="identity")
    bn.add_argument("--repeats", type=int, default=5)
    bn.add_argument("--hierarchies", type=int, default=50)
    bn.add_argument("--eps", type=float, default=0.03)
    bn.add_argument("--seed", type=int, default=None)
    bn.add_argument("--baseline-seconds", type=float, action="append")
    bn.add_argument("--csv")
    bn.add_argument("-o", "--output")
    bn.set_defaults(func=_cmd_bench)

    return parser


def cli_dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"cubemap: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cubemap: error: {exc}", file=sys.stderr)
        return 1
    except NotPartialCubeError as exc:
        print(
            json.dumps(
                {
                    "error": "NotPartialCube",
                    "reason": exc.reason.value,
                    "witness": list(exc.witness),
                },
                sort_keys=True,
            ),
            file=sys.stderr,
        )
        return 2
    except CubemapError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True),
            file=sys.stderr,
        )
        return 2
    except (OSError, ValueError) as exc:
        print(f"cubemap: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
