"""Train isolated and parallel executors and write accuracy tables.

Produces, under ``--out-dir``:

    isolated_<alg>.json, parallel.json      checkpoints
    isolated.<mode>.csv, parallel.<mode>.csv  accuracy grids (algorithms x scales)
    tables.md                               both grids side by side

Existing checkpoints are reused with ``--reuse`` so evaluation can be rerun
without retraining.
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from simplexec.harness.evaluation import EvalConfig, EvalReport, evaluate_scales
from simplexec.harness.fileio import atomic_write_text
from simplexec.harness.persistence import export_report, load_checkpoint, save_checkpoint
from simplexec.harness.training import TrainConfig, train
from simplexec.simplify import ALGORITHMS


def get_model(mode: str, args, out_dir: Path):
    path = out_dir / f"{mode.replace(':', '_')}.json"
    if args.reuse and path.exists():
        print(f"reusing {path}")
        return load_checkpoint(path)[0]
    config = TrainConfig(mode=mode, max_epochs=args.max_epochs, patience=args.patience, seed=args.seed)
    start = time.perf_counter()
    params, log = train(config, progress=lambda r: print(
        f"  {mode} epoch {r.epoch:3d} val loss {r.val_loss:.5f} acc {r.val_accuracy:.4f}", flush=True))
    print(f"{mode}: best epoch {log.best_epoch}, {log.stop_reason}, {time.perf_counter() - start:.0f}s")
    save_checkpoint(path, params, {"train_config": config.to_dict(), "best_epoch": log.best_epoch})
    atomic_write_text(path.with_suffix(".log.json"), json.dumps(log.to_dict(timings=False), indent=1) + "\n")
    return params


def markdown(title: str, report: EvalReport, mode: str) -> str:
    head = "| algorithm | " + " | ".join(f"{s}x" for s in report.scales) + " |"
    rule = "|---" * (len(report.scales) + 1) + "|"
    rows = [f"| {a} | " + " | ".join(f"{100 * report.accuracy(a, s, mode):.2f}%" for s in report.scales) + " |"
            for a in report.algorithms]
    return "\n".join([f"### {title}", "", head, rule, *rows, ""])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="artifacts/tables")
    parser.add_argument("--max-epochs", type=int, default=30)
    parser.add_argument("--patience", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modes", default="tf,rollout")
    parser.add_argument("--reuse", action="store_true", help="load checkpoints that already exist")
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    eval_config = EvalConfig(modes=tuple(args.modes.split(",")), seed=args.seed)
    print("config: " + json.dumps({**vars(args), "eval": eval_config.to_dict()}, default=str))

    # isolated: each algorithm's row comes from its own checkpoint
    isolated = EvalReport(eval_config.scales, tuple(a.value for a in ALGORITHMS), config=eval_config.to_dict())
    for algorithm in ALGORITHMS:
        params = get_model(f"isolated:{algorithm.value}", args, out_dir)
        single = EvalConfig(**{**eval_config.to_dict(), "algorithms": (algorithm.value,)})
        part = evaluate_scales(params, single, progress=lambda a, s, c: print(f"  isolated {a} {s}x {c}"))
        isolated.cells.update(part.cells)
    params = get_model("parallel", args, out_dir)
    parallel = evaluate_scales(params, eval_config, progress=lambda a, s, c: print(f"  parallel {a} {s}x {c}"))

    sections = []
    for mode in eval_config.modes:
        label = "teacher-forced" if mode == "tf" else "rollout"
        for name, report in (("isolated", isolated), ("parallel", parallel)):
            export_report(out_dir / f"{name}.{mode}.csv", report, mode,
                          {"training": name, "max_epochs": args.max_epochs, "seed": args.seed})
            sections.append(markdown(f"{name} training, {label} accuracy", report, mode))
    atomic_write_text(out_dir / "tables.md", "\n".join(sections))
    print("\n".join(sections))


if __name__ == "__main__":
    main()
