"""Summaries of finished run directories."""

from __future__ import annotations

from pathlib import Path

from .runner import EMERGENCE_FIELDS, SUMMARY_FIELDS, read_csv


def _opt_int(text: str) -> int | None:
    return int(text) if text not in ("", None) else None


def collect(run_dir) -> tuple[list[dict], list[dict]]:
    root = Path(run_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"no such run directory: {root}")
    summaries, emergence = [], []
    for path in sorted(root.rglob("summary.csv")):
        summaries.extend(read_csv(path, SUMMARY_FIELDS))
        em = path.with_name("emergence.csv")
        if em.exists():
            emergence.extend(read_csv(em, EMERGENCE_FIELDS))
    if not summaries:
        raise ValueError(f"{root}: no run summaries found")
    return summaries, emergence


def emergence_summary(emergence: list[dict], gated_ids: set[str]) -> dict[str, tuple[int, int]]:
    """For each intermediate state: (runs where it reached the threshold no later than the final state, runs)."""
    out: dict[str, list[int]] = {}
    for row in emergence:
        if row["state"] == "final" or row["run_id"] not in gated_ids:
            continue
        step = _opt_int(row["emergence_step"])
        final = _opt_int(row["final_emergence_step"])
        hit = step is not None and (final is None or step <= final)
        counts = out.setdefault(row["state"], [0, 0])
        counts[0] += int(hit)
        counts[1] += 1
    return {k: (v[0], v[1]) for k, v in sorted(out.items())}


def render(run_dir) -> str:
    summaries, emergence = collect(run_dir)
    lines = [f"{'run':<28} {'acc':>7} {'gate':>5} {'base':>7} {'adv':>7} {'max':>7}"]
    gated = set()
    for row in summaries:
        passed = row["gate_passed"] == "true"
        if passed:
            gated.add(row["run_id"])
        note = "" if passed else "  (excluded: below accuracy gate)"
        lines.append(f"{row['run_id']:<28} {row['final_accuracy']:>7} {'yes' if passed else 'no':>5} "
                     f"{row['metric_base']:>7} {row['metric_adv'] or '-':>7} {row['metric_max']:>7}{note}")
    lines.append(f"{len(gated)} of {len(summaries)} runs passed the gate")
    em = emergence_summary(emergence, gated)
    if em:
        lines.append("emergence before the final state (gated runs):")
        for state, (hit, total) in em.items():
            lines.append(f"  {state}: {hit}/{total} ({hit / total:.0%})")
    return "\n".join(lines)
