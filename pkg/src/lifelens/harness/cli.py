"""Command line entry point: ``lifelens {generate,train,eval,sweep,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .. import life
from ..fileio import save_dataset
from ..metric import metric_mean
from ..training import evaluate_metric
from . import checkpoint, report, runner
from .config import ConfigError, ExperimentConfig, load_config

GATE_FAILED = 3


def _load(args) -> ExperimentConfig:
    exp = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        exp = replace(exp, seed=args.seed, gen=replace(exp.gen, seed=args.seed))
    if getattr(args, "paper_scale", False):
        exp = exp.paper_scale()
    return exp


def _out(args, exp: ExperimentConfig) -> Path:
    out = Path(args.out or exp.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    exp = _load(args)
    out = _out(args, exp)
    examples = life.make_dataset(exp.gen, exp.dataset_count, exp.gol_timesteps)
    save_dataset(out / "dataset.gold", examples)
    g = exp.gen
    (out / "summary.txt").write_text(
        f"count = {len(examples)}\n"
        f"gol_timesteps = {exp.gol_timesteps}\n"
        f"grid = {g.height}x{g.width}\n"
        f"density = {g.density}\n"
        f"warmup_prob = {g.warmup_prob}\n"
        f"warmup_steps = {g.warmup_steps}\n"
        f"seed = {g.seed}\n"
    )
    print(f"wrote {len(examples)} examples to {out / 'dataset.gold'}")
    return 0


def cmd_train(args) -> int:
    exp = _load(args)
    out = _out(args, exp)
    result = runner.run_one(exp, 0, out)
    print(f"{result.run_id}: accuracy {result.record.final_accuracy:.4f} "
          f"gate {'passed' if result.gate_passed else 'failed'} metric {result.metric_max:.4f}")
    return 0 if result.gate_passed else GATE_FAILED


def cmd_eval(args) -> int:
    exp = _load(args)
    out = _out(args, exp)
    params, meta, _ = checkpoint.load(args.checkpoint)
    cfg = params.config
    if (cfg.grid_height, cfg.grid_width) != (exp.gen.height, exp.gen.width):
        raise ConfigError(f"checkpoint grid {cfg.grid_height}x{cfg.grid_width} does not match "
                          f"config grid {exp.gen.height}x{exp.gen.width}")
    seqs = runner.metric_sequences(exp, exp.seed)
    reports = evaluate_metric(params, seqs)
    run_id = Path(args.checkpoint).stem
    runner.write_metric_csv(out / "metric.csv", run_id, reports)
    runner.export_images(out, params, seqs, exp.image_count)
    value = metric_mean(reports)
    (out / "metric_mean.txt").write_text(f"{value:.6g}\n")
    print(f"metric {value:.6g} over {len(reports)} sequences")
    return 0


def cmd_sweep(args) -> int:
    exp = _load(args)
    out = _out(args, exp)
    rows = runner.run_sweep(exp, out, workers=args.workers, paper_scale=args.paper_scale)
    for row in rows:
        print(", ".join(f"{k}={runner.fmt(v)}" for k, v in row.items()))
    return 0


def cmd_report(args) -> int:
    print(report.render(args.run_dir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lifelens", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, workers=False):
        sp.add_argument("--config", help="experiment config (INI)")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--paper-scale", action="store_true",
                        help="10,000 evaluation sequences and published run counts")
        if workers:
            sp.add_argument("--workers", type=int, default=1)

    common(sub.add_parser("generate", help="write a binary dataset"))
    common(sub.add_parser("train", help="train one network and evaluate it"))
    ev = sub.add_parser("eval", help="score a checkpoint on fresh sequences")
    ev.add_argument("checkpoint")
    common(ev)
    common(sub.add_parser("sweep", help="run every configured cell and tabulate"), workers=True)
    rp = sub.add_parser("report", help="summarise run directories")
    rp.add_argument("run_dir")
    return p


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "eval": cmd_eval,
            "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, checkpoint.CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
