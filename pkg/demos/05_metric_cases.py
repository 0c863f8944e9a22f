"""The interpretability metric on hand-made sequences.

Run:  python3 demos/05_metric_cases.py
"""
import numpy as np

from lifelens.metric import metric

rng = np.random.default_rng(0)
s = [(rng.random((16, 16)) < 0.5).astype(np.uint8) for _ in range(4)]
junk = (rng.random((16, 16)) < 0.5).astype(np.uint8)

cases = [
    ("3 GoL / 3 model steps, only h_2 matches s_3", [junk, s[2]], s),
    ("3 / 3, both hidden states match s_2", [s[1], s[1]], s),
    ("2 GoL / 3 model steps, h_1 = s_2, h_2 = s_3 (ignored)", [s[1], s[2]], s[:3]),
    ("2 / 3, both hidden states match s_2", [s[1], s[1]], s[:3]),
    ("3 / 3, perfect", [s[1], s[2]], s),
]
for label, hidden, truth in cases:
    rep = metric(np.stack(hidden), np.stack(truth))
    hits = [(i, j, sc) for i, j, sc in rep.pairs if sc]
    print(f"{rep.value:5.2f}  {label}   pairs scored: {hits}")

# a near match: 12 of 256 cells wrong is still >= 95% agreement
near = s[1].copy()
near.reshape(-1)[:12] ^= 1
print(f"{metric(np.stack([near]), np.stack(s[:3])).value:5.2f}  12 wrong cells still count")
near.reshape(-1)[12] ^= 1
print(f"{metric(np.stack([near]), np.stack(s[:3])).value:5.2f}  13 wrong cells do not")
