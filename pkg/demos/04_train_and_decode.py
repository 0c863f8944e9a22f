"""Train the recurrent network to predict the state two steps ahead, then look
at what its single intermediate hidden state decodes to.

Takes a minute or two on one core.

Run:  python3 demos/04_train_and_decode.py [steps]
"""
import sys

import numpy as np

from lifelens import life, model
from lifelens.metric import metric_mean
from lifelens.training import StreamSource, TrainConfig, evaluate_metric, infer, train_main

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
gen = life.GenConfig(seed=0)
params = model.init_params(model.ModelConfig(model_timesteps=2), seed=0)
source = StreamSource(gen, gol_timesteps=2)


def progress(step, point):
    inter = point.intermediate_accuracy[0]
    print(f"step {step:5d}  final acc {point.final_accuracy:.4f}  decoded h_1 vs s_2 {inter:.4f}")


rec = train_main(params, TrainConfig(max_steps=steps, eval_interval=250, seed=0), source, on_eval=progress)
print(f"\ngate passed: {rec.gate_passed} after {rec.steps_run} steps")

truth = life.sample_sequences(gen, gen.rng(3), 500, 2)
decoded, _ = infer(params, truth)
# which ground-truth state does h_1 resemble most?
for j in range(3):
    print(f"pixel agreement of decoded h_1 with s_{j + 1}: {np.mean(decoded[:, 0] == truth[:, j]):.3f}")
print("all-dead baseline vs s_2:", f"{np.mean(truth[:, 1] == 0):.3f}")
print("interpretability metric:", metric_mean(evaluate_metric(params, truth)))
