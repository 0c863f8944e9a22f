"""Single runs, sweeps and the CSV files they leave behind.

A run directory holds::

    summary.csv      one row: gate status and metric values
    train_log.csv    step, main_loss, autoencoder_loss
    eval_log.csv     step, final_accuracy, intermediate_1..n
    emergence.csv    first step each decoded state reached the emergence threshold
    metric_base.csv  per (sequence, i, j) scores without adversarial fine-tuning
    metric_adv.csv   same after adversarial fine-tuning (when [adv] is configured)
    adv_log.csv      step, disc_loss, gen_loss, disc_accuracy
    base.llns        checkpoint after main training
    adv.llns         checkpoint after adversarial fine-tuning

Run ``k`` of an experiment uses seed ``experiment.seed + k`` for data,
initialisation and minibatch order. All floats are written with 6
significant digits.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import life
from ..fileio import image_strip, save_pgm
from ..metric import MatchReport, metric_mean, max_of_variants, write_report_csv
from ..model import NetworkParams, init_params
from ..training import (RunRecord, StreamSource, evaluate_metric, infer, train_adversarial,
                        train_main)
from . import checkpoint
from .config import Cell, ExperimentConfig

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ("run_id", "seed", "gol_timesteps", "model_timesteps", "use_autoencoder", "use_rnn",
                  "steps_run", "final_accuracy", "gate_passed", "metric_base", "metric_adv", "metric_max")
EMERGENCE_FIELDS = ("run_id", "seed", "state", "emergence_step", "final_emergence_step")
TABLE_FIELDS = ("gol_timesteps", "model_timesteps", "use_autoencoder", "use_rnn", "runs_attempted",
                "runs_gated_in", "mean_metric_without_adv", "mean_metric_with_adv", "mean_of_max")
NO_GATED_RUNS = "no gated runs"
METRIC_SEQUENCE_OFFSET = 3


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for row in rows:
            values = [row.get(f) for f in fields] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in values])


def read_csv(path, required=()) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        return list(reader)


@dataclass
class RunResult:
    run_id: str
    seed: int
    cell: Cell
    record: RunRecord
    metric_base: float
    metric_adv: float | None
    adv_record: RunRecord | None = None

    @property
    def metric_max(self) -> float:
        return max_of_variants(self.metric_base, self.metric_adv)

    @property
    def gate_passed(self) -> bool:
        return self.record.gate_passed

    def summary_row(self) -> dict:
        return {
            "run_id": self.run_id, "seed": self.seed,
            "gol_timesteps": self.cell.gol_timesteps, "model_timesteps": self.cell.model_timesteps,
            "use_autoencoder": self.cell.use_autoencoder, "use_rnn": self.cell.use_rnn,
            "steps_run": self.record.steps_run, "final_accuracy": self.record.final_accuracy,
            "gate_passed": self.record.gate_passed, "metric_base": self.metric_base,
            "metric_adv": self.metric_adv, "metric_max": self.metric_max,
        }


def metric_sequences(exp: ExperimentConfig, seed: int) -> np.ndarray:
    gen = replace(exp.gen, seed=seed)
    return life.sample_sequences(gen, gen.rng(METRIC_SEQUENCE_OFFSET), exp.metric_eval_sequences,
                                 exp.gol_timesteps)


def write_metric_csv(path, run_id: str, reports: list[MatchReport]) -> None:
    rows = []
    for k, rep in enumerate(reports):
        rows.extend(rep.csv_rows(run_id, k))
    write_report_csv(path, rows)


def write_record_csvs(out: Path, run_id: str, seed: int, rec: RunRecord) -> None:
    write_csv(out / "train_log.csv", ("step", "main_loss", "autoencoder_loss"),
              [(s, m, a) for s, m, a in rec.loss_history])
    n = len(rec.emergence_steps)
    write_csv(out / "eval_log.csv",
              ("step", "final_accuracy") + tuple(f"intermediate_{i + 1}" for i in range(n)),
              [(e.step, e.final_accuracy, *e.intermediate_accuracy) for e in rec.evals])
    rows = [(run_id, seed, f"h{i + 1}", s, rec.final_emergence_step) for i, s in enumerate(rec.emergence_steps)]
    rows.append((run_id, seed, "final", rec.final_emergence_step, rec.final_emergence_step))
    write_csv(out / "emergence.csv", EMERGENCE_FIELDS, rows)


def export_images(out: Path, params: NetworkParams, truth: np.ndarray, count: int) -> None:
    """One PGM strip per sequence: s_1 | decoded h_1..h_n | s_2..s_{m-1} | s_m | prediction."""
    if count <= 0:
        return
    img_dir = out / "images"
    img_dir.mkdir(exist_ok=True)
    sub = truth[:count]
    decoded, final = infer(params, sub)
    for k in range(len(sub)):
        parts = [sub[k, 0], *decoded[k], *sub[k, 1:-1], sub[k, -1], final[k]]
        save_pgm(img_dir / f"seq_{k:04d}.pgm", image_strip(parts))


def run_one(exp: ExperimentConfig, run_index: int, out_dir, run_id: str | None = None) -> RunResult:
    """Train one network (and optionally its adversarial variant) and write its run directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = exp.seed + run_index
    cell = exp.cell
    run_id = run_id or f"{cell.name}_s{seed}"
    gen = replace(exp.gen, seed=seed)
    train_cfg = replace(exp.train, seed=seed)
    source = StreamSource(gen, exp.gol_timesteps)

    params = init_params(exp.model, seed=seed)
    log.info("run %s: training", run_id)
    rec = train_main(params, train_cfg, source)
    checkpoint.save(out / "base.llns", params, step=rec.steps_run)
    rec.checkpoint = str(out / "base.llns")
    write_record_csvs(out, run_id, seed, rec)

    seqs = metric_sequences(exp, seed)
    base_reports = evaluate_metric(params, seqs)
    write_metric_csv(out / "metric_base.csv", run_id, base_reports)
    m_base = metric_mean(base_reports)

    m_adv, adv_rec = None, None
    final_params = params
    if exp.adv is not None:
        adv_params = params.clone()
        log.info("run %s: adversarial fine-tuning", run_id)
        adv_rec = train_adversarial(adv_params, train_cfg, exp.adv, source)
        checkpoint.save(out / "adv.llns", adv_params, step=rec.steps_run + adv_rec.steps_run)
        write_csv(out / "adv_log.csv", ("step", "disc_loss", "gen_loss", "disc_accuracy"), adv_rec.adv_history)
        adv_reports = evaluate_metric(adv_params, seqs)
        write_metric_csv(out / "metric_adv.csv", run_id, adv_reports)
        m_adv = metric_mean(adv_reports)
        if m_adv > m_base:
            final_params = adv_params

    export_images(out, final_params, seqs, exp.image_count)
    result = RunResult(run_id, seed, cell, rec, m_base, m_adv, adv_rec)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, [result.summary_row()])
    log.info("run %s: accuracy %.4f gate %s metric %.3f / %s", run_id, rec.final_accuracy,
             rec.gate_passed, m_base, "-" if m_adv is None else f"{m_adv:.3f}")
    return result


def _run_job(args):
    exp, k, out = args
    return run_one(exp, k, out)


def run_sweep(exp: ExperimentConfig, out_dir, workers: int = 1, paper_scale: bool = False) -> list[dict]:
    """Run every cell ``runs_per_cell`` times and write ``table.csv``; returns the table rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = exp.cells or (exp.cell,)
    jobs = []
    for cell in cells:
        cexp = exp.for_cell(cell)
        for k in range(exp.runs_for(cell, paper_scale)):
            jobs.append((cexp, k, out / cell.name / f"run_{k:03d}"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    results.sort(key=lambda r: (r.cell.key, r.seed))
    rows = table_rows(cells, results)
    write_csv(out / "table.csv", TABLE_FIELDS, rows)
    write_csv(out / "runs.csv", SUMMARY_FIELDS, [r.summary_row() for r in results])
    return rows


def _mean_or_marker(values):
    return float(np.mean(values)) if values else NO_GATED_RUNS


def table_rows(cells, results: list[RunResult]) -> list[dict]:
    """Per-cell means over gate-passing runs only."""
    rows = []
    for cell in cells:
        mine = [r for r in results if r.cell == cell]
        gated = [r for r in mine if r.gate_passed]
        adv_vals = [r.metric_adv for r in gated if r.metric_adv is not None]
        rows.append({
            "gol_timesteps": cell.gol_timesteps, "model_timesteps": cell.model_timesteps,
            "use_autoencoder": cell.use_autoencoder, "use_rnn": cell.use_rnn,
            "runs_attempted": len(mine), "runs_gated_in": len(gated),
            "mean_metric_without_adv": _mean_or_marker([r.metric_base for r in gated]),
            "mean_metric_with_adv": (_mean_or_marker(adv_vals) if adv_vals or not gated else None),
            "mean_of_max": _mean_or_marker([r.metric_max for r in gated]),
        })
    return rows
