"""Command-line entry point: batch simulations, serving, evaluation, and
synthetic oracle generation."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import coco, synth
from .config import ConfigError, RunConfig
from .detector import SyntheticDetector
from .loop import FinalReport, run, seed_pool
from .simagent import dataset_accuracy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

SOURCE_COLUMNS = ("manual", "model-auto", "model-unchanged", "recovered", "ground-truth")

log = logging.getLogger("olala")


def _format_report(report: FinalReport, cfg: RunConfig) -> str:
    lines = [
        f"# mode: {report.mode}",
        f"# seed: {cfg.seed}  budget: {cfg.budget}  rounds: {cfg.rounds}  "
        f"r: {cfg.r_initial}/{cfg.r_last} ({cfg.decay})",
        "round\tratio\tskill\tpages\tfull\tdiscounted\trecovered\tspent\tallowance\tdataset_ap\t"
        + "\t".join(SOURCE_COLUMNS),
    ]
    for r in report.rounds:
        counts = r.charge_counts
        lines.append(
            f"{r.round}\t{r.ratio:.6f}\t{r.skill:.6f}\t{r.pages_labeled}\t"
            f"{counts['full']}\t{counts['discounted']}\t{counts['recovered']}\t"
            f"{r.spent:.6f}\t{r.allowance:.6f}\t{r.dataset_ap:.6f}\t"
            + "\t".join(f"{r.source_histogram.get(c, 0.0):.6f}" for c in SOURCE_COLUMNS)
        )
    lines.append("")
    lines.append(
        f"final\tAP {report.final_ap:.6f}\tlabeled I/O {report.labeled_images}/"
        f"{report.labeled_objects}\tspent {report.total_spent:.6f}"
    )
    lines.append("")
    return "\n".join(lines)


def _run_one(cfg: RunConfig, mode: str) -> FinalReport:
    oracle = coco.load_coco(cfg.dataset)
    detector = SyntheticDetector(oracle, cfg.synthetic_config())
    pool = seed_pool(oracle, cfg.seed_pages, cfg.seed)
    return run(pool, oracle, detector, cfg.loop_config(mode))


def cmd_simulate(args) -> int:
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget is not None:
        cfg.budget = args.budget
    if args.rounds is not None:
        cfg.rounds = args.rounds
    if args.oracle is not None:
        cfg.dataset = args.oracle
    if args.mode is not None:
        cfg.modes = [args.mode]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    comparison = ["mode\tbudget\trounds\tfinal_ap\tlabeled_images\tlabeled_objects\tspent"]
    try:
        grid = cfg.sweep_grid()
        for point in grid:
            for mode in point.modes:
                log.info("running mode=%s budget=%s rounds=%s", mode, point.budget, point.rounds)
                report = _run_one(point, mode)
                stem = f"report_{mode}"
                if len(grid) > 1:
                    stem = f"report_m{point.budget}_T{point.rounds}_{mode}"
                (out_dir / f"{stem}.txt").write_text(_format_report(report, point))
                comparison.append(
                    f"{mode}\t{point.budget}\t{point.rounds}\t{report.final_ap:.6f}\t"
                    f"{report.labeled_images}\t{report.labeled_objects}\t{report.total_spent:.6f}"
                )
    except (ConfigError, coco.CocoFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    (out_dir / "comparison.txt").write_text("\n".join(comparison) + "\n")
    print(f"wrote {len(comparison) - 1} report(s) to {out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        cfg = RunConfig.load(args.config) if args.config else None
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    host, _, port = args.bind.rpartition(":")
    host = host or "127.0.0.1"
    app = create_app(args.state_dir, image_root=cfg.image_root if cfg else None)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="warning")
    except (OSError, ValueError) as exc:
        print(f"error: cannot bind {args.bind}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        created = coco.load_coco(args.created)
        oracle = coco.load_coco(args.oracle)
        result = dataset_accuracy(created, oracle)
    except (coco.CocoFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"mean_ap\t{result['mean_ap']:.6f}")
    for i, ap in enumerate(result["per_category"]):
        shown = "nan" if ap != ap else f"{ap:.6f}"
        print(f"category_{i}\t{shown}")
    return EXIT_OK


def cmd_synth(args) -> int:
    dataset = synth.generate_oracle(
        n_pages=args.pages,
        mean_objects=args.mean_objects,
        n_categories=args.categories,
        seed=args.seed if args.seed is not None else 0,
    )
    coco.export_coco(dataset, args.out)
    print(f"wrote {len(dataset.pages)} pages / {dataset.n_objects} objects to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="olala")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run labeling simulations from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--oracle", default=None, help="override the dataset path")
    p.add_argument("--out-dir", default="reports")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="serve the annotation API")
    p.add_argument("--config", default=None)
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.add_argument("--state-dir", default="olala-state")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="dataset accuracy of a created dataset vs an oracle")
    p.add_argument("--created", required=True)
    p.add_argument("--oracle", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic oracle dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--pages", type=int, default=200)
    p.add_argument("--mean-objects", type=float, default=30.0)
    p.add_argument("--categories", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("OLALA_LOG_LEVEL", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
