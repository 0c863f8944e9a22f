"""Decoding the hidden states of a recurrent network trained on the Game of Life."""

from .life import GenConfig, evolve, make_dataset, step
from .metric import MatchReport, metric, metric_mean
from .model import ModelConfig, NetworkParams, construct_gol_step_params, forward_inference, init_params
from .training import AdvConfig, TrainConfig, train_adversarial, train_main

__all__ = [
    "GenConfig", "evolve", "make_dataset", "step",
    "MatchReport", "metric", "metric_mean",
    "ModelConfig", "NetworkParams", "construct_gol_step_params", "forward_inference", "init_params",
    "AdvConfig", "TrainConfig", "train_adversarial", "train_main",
]
