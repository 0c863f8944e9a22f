"""How well decoded hidden states line up with the true intermediate states.

Given decoded, thresholded hidden states ``h_1..h_n`` and a true sequence
``s_1..s_m``, every pair ``(h_i, s_j)`` with ``2 <= j <= m - 1`` is scored:
0 if fewer than 95% of cells agree, otherwise 1 the first time ``s_j`` is
matched and 0.5 for every later match of the same ``s_j``. The score sum is
divided by ``min(n, m - 2)``, so the value can exceed 1 when ``n > m - 2``.

Pairs are visited in ``(i, j)`` lexicographic order; that order decides which
of several matchers of one truth state receives the full point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MATCH_THRESHOLD = 0.95
REPORT_FIELDS = ("run_id", "sequence_id", "i", "j", "score", "value")


def match_fraction(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"grids differ in shape: {a.shape} vs {b.shape}")
    return float(np.mean(a == b))


@dataclass
class MatchReport:
    value: float
    denominator: int
    # (i, j, score) with 1-based indices as in h_i / s_j
    pairs: list[tuple[int, int, float]] = field(default_factory=list)

    def matched_truth(self) -> set[int]:
        return {j for _, j, s in self.pairs if s > 0}

    def csv_rows(self, run_id: str, sequence_id: int) -> list[dict]:
        return [
            {"run_id": run_id, "sequence_id": sequence_id, "i": i, "j": j,
             "score": score, "value": self.value}
            for i, j, score in self.pairs
        ]


def metric(hidden_decoded, truth, threshold: float = MATCH_THRESHOLD) -> MatchReport:
    """Score one sequence. ``hidden_decoded`` is ``[n, H, W]`` binary, ``truth`` is ``[m, H, W]``."""
    hidden = np.asarray(hidden_decoded)
    truth = np.asarray(truth)
    if hidden.ndim != 3 or truth.ndim != 3:
        raise ValueError("expected stacks of grids: hidden [n, H, W], truth [m, H, W]")
    n, m = hidden.shape[0], truth.shape[0]
    if n < 1 or m < 3:
        raise ValueError(f"metric undefined for n={n}, m={m}: need n >= 1 and m >= 3")
    if hidden.shape[1:] != truth.shape[1:]:
        raise ValueError(f"hidden grids {hidden.shape[1:]} and truth grids {truth.shape[1:]} differ")

    # fraction of agreeing cells for every (i, j) at once
    agree = (hidden[:, None] == truth[None, 1:m - 1]).mean(axis=(2, 3))
    matched = np.zeros(m - 2, dtype=bool)
    pairs = []
    total = 0.0
    for i in range(n):
        for jj in range(m - 2):
            if agree[i, jj] < threshold:
                score = 0.0
            else:
                score = 0.5 if matched[jj] else 1.0
                matched[jj] = True
            pairs.append((i + 1, jj + 2, score))
            total += score
    denom = min(n, m - 2)
    return MatchReport(value=total / denom, denominator=denom, pairs=pairs)


def metric_mean(reports) -> float:
    """Arithmetic mean of metric values; accepts MatchReports or (hidden, truth) pairs."""
    values = []
    for r in reports:
        values.append(r.value if isinstance(r, MatchReport) else metric(*r).value)
    if not values:
        raise ValueError("metric_mean of an empty collection")
    return float(np.mean(values))


def max_of_variants(base: float, adversarial: float | None) -> float:
    """Headline value of a run evaluated with and without adversarial fine-tuning."""
    if adversarial is None:
        return base
    return max(base, adversarial)


def write_report_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
