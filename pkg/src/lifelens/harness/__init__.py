"""Experiment harness: configs, checkpoints, runs, sweeps and the CLI."""
