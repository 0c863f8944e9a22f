"""A network whose weights are written by hand so that every RNN timestep is
exactly one Game of Life step. Decoding its hidden states recovers every
intermediate state, so the interpretability metric is 1.

Run:  python3 demos/03_hand_built_network.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from lifelens import life, model
from lifelens.fileio import image_strip, save_pgm
from lifelens.metric import metric_mean
from lifelens.training import evaluate_metric, infer

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/hand_built")
out.mkdir(parents=True, exist_ok=True)

cfg = model.ModelConfig(model_timesteps=3)
params = model.construct_gol_step_params(cfg)
first = params.rnn_blocks[0][0]
print("first block layer, channel 0 stencil (2 * neighbours + self):")
print(first.weight.data[0, 0])
print("ramp offsets:", -first.bias.data[:4])

gen = life.GenConfig(seed=1)
truth = life.sample_sequences(gen, gen.rng(3), 500, 3)
decoded, final = infer(params, truth)
print("\nfinal prediction exact on", int((final == truth[:, -1]).all(axis=(1, 2)).sum()), "of 500 sequences")
print("metric:", metric_mean(evaluate_metric(params, truth)))

for k in range(3):
    strip = image_strip([truth[k, 0], *decoded[k], truth[k, -1], final[k]])
    save_pgm(out / f"seq_{k}.pgm", strip)
print(f"image strips (s_1 | decoded h_1, h_2 | s_4 | prediction) in {out}")
