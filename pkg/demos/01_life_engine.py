"""Tour of the Game of Life engine: rules, wrap-around, datasets and image export.

Run:  python3 demos/01_life_engine.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from lifelens import life
from lifelens.fileio import image_strip, load_dataset, save_dataset, save_pgm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/life")
out.mkdir(parents=True, exist_ok=True)


def show(g):
    return "\n".join("".join("#" if c else "." for c in row) for row in g)


# A glider on a small torus. After 4 generations it has moved one cell
# diagonally; after 4 * 8 it is back where it started.
glider = np.zeros((8, 8), np.uint8)
for r, c in [(0, 1), (1, 2), (2, 0), (2, 1), (2, 2)]:
    glider[r, c] = 1
seq = life.evolve(glider, 32)
print("glider, generations 0 and 4:")
print(show(seq[0]), "\n")
print(show(seq[4]), "\n")
assert np.array_equal(seq[4], life.shift(glider, 1, 1))
assert np.array_equal(seq[32], glider)
print("after 32 generations on an 8x8 torus the glider is home again\n")

# Random training data: raw noise, sometimes pre-evolved so the first state
# already has some structure.
gen = life.GenConfig(seed=7)
data = life.make_dataset(gen, count=100, gol_timesteps=3)
density = np.mean([ex.truth.mean(axis=(1, 2)) for ex in data], axis=0)
print("mean live fraction per state s_1..s_4:", np.round(density, 3))

save_dataset(out / "train.gold", data)
assert load_dataset(out / "train.gold") == data
print(f"wrote {out / 'train.gold'} ({(out / 'train.gold').stat().st_size} bytes)")

save_pgm(out / "sequence_0.pgm", image_strip(list(data[0].truth)))
print(f"wrote {out / 'sequence_0.pgm'}: s_1 | s_2 | s_3 | s_4")
