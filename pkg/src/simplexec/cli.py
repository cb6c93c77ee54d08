"""Command-line entry point: ``python -m simplexec <command> ...``.

Every command prints its resolved configuration (including the seed) as a
``config:`` JSON line before doing any work.  Exit codes: 0 success,
2 usage or invalid configuration, 3 bad input file or graph, 4 infeasible
generator spec or trace, 5 numerical failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, replace

from .errors import FormatError, SimplexecError
from .graph import GroundTruth
from .harness.training import TrainConfig
from .simplify import ALGORITHMS, Algorithm, SimplifyConfig, derive_truth, run_algorithm, run_pipeline
from .synthgen import GenSpec, density_spec, generate_dataset
from .traces import build_trace

EXIT_USAGE = 2


def _print_config(command: str, config: dict) -> None:
    print("config: " + json.dumps({"command": command, **config}, sort_keys=True, default=str), flush=True)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"scales must be positive integers, got {text!r}")
    return values


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return lo, hi


# -- generate / trace ----------------------------------------------------------

def cmd_generate(args) -> int:
    from .harness.persistence import save_dataset

    spec = density_spec(args.kind, args.backbone, args.scale, seed=args.seed)
    overrides = {k: getattr(args, k) for k in ("n_transitive", "n_tips", "n_bubbles", "external_edge_prob",
                                                 "reverse_tip_prob", "max_tip_len", "max_path_len", "feature_range")
                 if getattr(args, k) is not None}
    spec = replace(spec, **overrides)
    spec.validate()
    _print_config("generate", {**asdict(spec), "count": args.count, "out": args.out})
    data = generate_dataset(spec, args.count)
    records = [(g, truth, [build_trace(g, truth, a, i) for a in ALGORITHMS]) for i, (g, truth) in enumerate(data)]
    save_dataset(args.out, records)
    nodes = sum(g.node_count for g, _ in data)
    print(f"wrote {len(records)} graphs ({nodes} nodes) to {args.out}")
    return 0


def cmd_trace(args) -> int:
    from .harness.persistence import load_dataset, save_dataset

    algorithm = Algorithm.parse(args.algorithm)
    _print_config("trace", {"dataset": args.dataset, "algorithm": algorithm.value, "out": args.out})
    records = []
    for i, (g, truth, _) in enumerate(load_dataset(args.dataset)):
        trace = build_trace(g, truth, algorithm, i)
        records.append((g, truth, [trace]))
        print(f"graph {i}: {g.node_count} nodes, {g.edge_count} edges, {trace.length} steps, "
              f"{int(trace.reached[-1].sum())} reached")
    if args.out:
        save_dataset(args.out, records)
        print(f"wrote {len(records)} traces to {args.out}")
    return 0


# -- train / eval --------------------------------------------------------------

def cmd_train(args) -> int:
    from .harness.fileio import atomic_write_text
    from .harness.persistence import save_checkpoint
    from .harness.training import train

    config = TrainConfig(mode=args.mode, learning_rate=args.lr, patience=args.patience,
                         max_epochs=args.max_epochs, train_count=args.train_count,
                         val_fraction=args.val_fraction, seed=args.seed, latent_dim=args.latent_dim,
                         backbone_len=args.backbone, feature_range=args.feature_range)
    config.validate()
    _print_config("train", {**config.to_dict(), "out_checkpoint": args.out_checkpoint, "out_log": args.out_log})

    def progress(rec):
        print(f"epoch {rec.epoch:3d}  train {rec.train_loss:.5f}  val {rec.val_loss:.5f}  "
              f"acc {rec.val_accuracy:.4f}  ({rec.seconds:.1f}s)", flush=True)

    params, log = train(config, progress=progress)
    print(f"best epoch {log.best_epoch} (val loss {log.best_val_loss:.5f}); {log.stop_reason}")
    save_checkpoint(args.out_checkpoint, params, {"train_config": config.to_dict(), "best_epoch": log.best_epoch})
    if args.out_log:
        atomic_write_text(args.out_log, json.dumps(log.to_dict(timings=False), indent=1) + "\n")
    print(f"wrote checkpoint to {args.out_checkpoint}")
    return 0


def cmd_eval(args) -> int:
    from .harness.evaluation import EvalConfig, evaluate_scales, evaluate, gfa_items
    from .harness.gfa import read_gfa
    from .harness.persistence import export_report, load_checkpoint

    params, meta = load_checkpoint(args.checkpoint)
    modes = ("tf", "rollout") if args.mode == "both" else (args.mode,)
    if args.gfa:
        _print_config("eval", {"checkpoint": args.checkpoint, "gfa": args.gfa, "modes": modes,
                               "seed": None, "max_tip_len": args.max_tip_len, "max_path_len": args.max_path_len})
        parsed = read_gfa(args.gfa)
        for algorithm in ALGORITHMS:
            items = gfa_items(parsed.graph, algorithm, SimplifyConfig(args.max_tip_len, args.max_path_len))
            scores = "  ".join(f"{m} {evaluate(params, items, m):.4f}" for m in modes)
            print(f"{algorithm.value:10s} {scores}")
        return 0
    algorithms = tuple(Algorithm.parse(a).value for a in args.algorithms.split(","))
    config = EvalConfig(scales=args.scales, algorithms=algorithms, modes=modes, test_graphs=args.test_graphs,
                        min_test_graphs=args.min_test_graphs, backbone_len=args.backbone, seed=args.seed)
    _print_config("eval", {**config.to_dict(), "checkpoint": args.checkpoint, "report": args.report})

    def progress(a, scale, cell):
        scores = "  ".join(f"{m} {(cell.teacher_forced_accuracy if m == 'tf' else cell.rollout_accuracy):.4f}"
                           for m in modes)
        print(f"{a:10s} {scale:3d}x  graphs {cell.graphs:3d}  {scores}", flush=True)

    report = evaluate_scales(params, config, progress=progress)
    if args.report:
        meta_lines = {"checkpoint_train_config": json.dumps(meta.get("train_config", {}), sort_keys=True),
                      "eval_config": json.dumps(config.to_dict(), sort_keys=True)}
        for mode in modes:
            path = args.report if len(modes) == 1 else args.report.replace(".csv", f".{mode}.csv")
            export_report(path, report, mode, meta_lines)
            print(f"wrote {mode} report to {path}")
    return 0


# -- GFA commands --------------------------------------------------------------

def cmd_simplify(args) -> int:
    from .harness.gfa import read_gfa, write_gfa

    config = SimplifyConfig(args.max_tip_len, args.max_path_len)
    _print_config("simplify", {"input": args.input, "out": args.out, "algorithm": args.algorithm,
                               **asdict(config), "seed": None})
    parsed = read_gfa(args.input)
    g = parsed.graph
    results = (run_pipeline(g, config) if args.algorithm == "all"
               else [run_algorithm(g, args.algorithm, config)])
    for res in results:
        print(f"{res.algorithm.value}: removed {len(res.removed_edges)} edges, {len(res.removed_nodes)} nodes")
    out = results[-1].retained_graph
    keep = {e.pair for e in out.edges}
    overlaps = [o for e, o in zip(g.edges, parsed.overlaps) if e.pair in keep]
    print(f"{g.node_count} nodes: {g.edge_count} -> {out.edge_count} edges")
    if args.out:
        write_gfa(args.out, out, parsed.names, parsed.lengths, overlaps)
        print(f"wrote {args.out}")
    return 0


def cmd_gfa_stats(args) -> int:
    from .harness.gfa import read_gfa

    _print_config("gfa-stats", {"input": args.input, "max_tip_len": args.max_tip_len,
                                "max_path_len": args.max_path_len, "seed": None})
    parsed = read_gfa(args.input)
    g = parsed.graph
    ins, outs = zip(*(g.degrees(v) for v in range(g.node_count))) if g.node_count else ((), ())
    reverse = sum(1 for n in parsed.names if n.endswith("-"))
    print(f"nodes {g.node_count} ({g.node_count - reverse} segments, {reverse} reverse variants)")
    print(f"edges {g.edge_count}")
    print(f"sources {sum(1 for d in ins if d == 0)}  sinks {sum(1 for d in outs if d == 0)}")
    print(f"max in-degree {max(ins, default=0)}  max out-degree {max(outs, default=0)}")
    truth: GroundTruth = derive_truth(g, SimplifyConfig(args.max_tip_len, args.max_path_len))
    print(f"transitive edges {len(truth.transitive_edges)}  tip nodes {len(truth.tip_nodes)}  "
          f"bubble edges {len(truth.bubble_removable_edges)}")
    for message, count in sorted(parsed.warnings.items()):
        print(f"warning: {message} x{count}")
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplexec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset with traces")
    p.add_argument("--kind", default="parallel", choices=["parallel", *(a.value for a in ALGORITHMS)])
    p.add_argument("--backbone", type=int, default=GenSpec.backbone_len)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    for name in ("n-transitive", "n-tips", "n-bubbles", "max-tip-len", "max-path-len"):
        p.add_argument(f"--{name}", type=int)
    for name in ("external-edge-prob", "reverse-tip-prob"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--feature-range", type=_range, help="edge features drawn from (lo, hi]; default 1,1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("trace", help="rebuild one algorithm's traces for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algorithm", required=True, choices=[a.value for a in ALGORITHMS])
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("train", help="train an executor checkpoint")
    p.add_argument("--mode", default="parallel", help="parallel or isolated:<algorithm>")
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--train-count", type=int, default=100)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--latent-dim", type=int, default=32)
    p.add_argument("--backbone", type=int, default=50)
    p.add_argument("--feature-range", type=_range, default=TrainConfig.feature_range,
                   help="edge features of the training graphs, drawn from (lo, hi]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--out-log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy per algorithm and scale")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scales", type=_int_list, default=(1, 2, 4, 8, 20))
    p.add_argument("--mode", default="tf", choices=["tf", "rollout", "both"])
    p.add_argument("--algorithms", default=",".join(a.value for a in ALGORITHMS))
    p.add_argument("--test-graphs", type=int, default=20)
    p.add_argument("--min-test-graphs", type=int, default=4)
    p.add_argument("--backbone", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gfa", help="evaluate on a GFA graph against the exact algorithms instead")
    p.add_argument("--max-tip-len", type=int, default=10)
    p.add_argument("--max-path-len", type=int, default=10)
    p.add_argument("--report", help="CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simplify", help="run the exact simplifiers on a GFA file")
    p.add_argument("input")
    p.add_argument("--algorithm", default="all", choices=["all", *(a.value for a in ALGORITHMS)])
    p.add_argument("--max-tip-len", type=int, default=10)
    p.add_argument("--max-path-len", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("gfa-stats", help="summarize a GFA file")
    p.add_argument("input")
    p.add_argument("--max-tip-len", type=int, default=10)
    p.add_argument("--max-path-len", type=int, default=10)
    p.set_defaults(func=cmd_gfa_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        code = args.func(args)
    except SimplexecError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [{FormatError.__name__}]: {exc}", file=sys.stderr)
        return FormatError.exit_code
    except ValueError as exc:
        print(f"error [invalid configuration]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.getLogger(__name__).debug("finished in %.1fs", time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
