"""Conway's Game of Life on a torus, random initial states and datasets.

Grids are plain ``uint8`` numpy arrays holding 0/1 values. Every function
accepts a single ``(H, W)`` grid or a batch shaped ``(..., H, W)``; the last
two axes are always the spatial ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SIZE = 8
MAX_SIZE = 64


def as_grid(cells) -> np.ndarray:
    """Validate ``cells`` as a binary grid (or batch of grids) and return uint8."""
    arr = np.asarray(cells)
    if arr.ndim < 2 or arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise ValueError(f"grid must have positive height and width, got shape {arr.shape}")
    if arr.dtype != np.uint8 or not np.all(arr <= 1):
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("grid cells must be 0 or 1")
        arr = arr.astype(np.uint8)
    return arr


def neighbor_counts(g: np.ndarray) -> np.ndarray:
    """Number of live Moore neighbours of every cell, wrapping at the edges."""
    g = np.asarray(g, dtype=np.uint8)
    # separable 3x3 box sum: rows then columns
    rows = g + np.roll(g, 1, axis=-2) + np.roll(g, -1, axis=-2)
    box = rows + np.roll(rows, 1, axis=-1) + np.roll(rows, -1, axis=-1)
    return box - g


def step(g) -> np.ndarray:
    """One B3/S23 generation with toroidal boundary. The input is not modified."""
    g = as_grid(g)
    n = neighbor_counts(g)
    return ((n == 3) | ((g == 1) & (n == 2))).astype(np.uint8)


def evolve(g, timesteps: int) -> np.ndarray:
    """Return the sequence ``[g, step(g), ..., step^timesteps(g)]``.

    The result has a new leading axis of length ``timesteps + 1``; for a batch
    ``(B, H, W)`` input the output is ``(B, timesteps + 1, H, W)``.
    """
    if int(timesteps) < 1:
        raise ValueError(f"timesteps must be >= 1, got {timesteps}")
    g = as_grid(g)
    states = [g.copy()]
    for _ in range(int(timesteps)):
        states.append(step(states[-1]))
    return np.stack(states, axis=-3)


@dataclass(frozen=True)
class GenConfig:
    """How initial states are drawn.

    With probability ``warmup_prob`` a noise grid is run forward
    ``warmup_steps`` generations before use, which gives gliders, blinkers
    and other structure instead of pure noise.
    """

    height: int = 16
    width: int = 16
    density: float = 0.38
    warmup_prob: float = 0.5
    warmup_steps: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("height", "width"):
            v = getattr(self, name)
            if not MIN_SIZE <= v <= MAX_SIZE:
                raise ValueError(f"{name} must be in [{MIN_SIZE}, {MAX_SIZE}], got {v}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must be in [0, 1], got {self.density}")
        if not 0.0 <= self.warmup_prob <= 1.0:
            raise ValueError(f"warmup_prob must be in [0, 1], got {self.warmup_prob}")
        if self.warmup_steps < 0:
            raise ValueError(f"warmup_steps must be >= 0, got {self.warmup_steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])


def random_grids(cfg: GenConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` initial states, shape ``(count, H, W)``."""
    cells = (rng.random((count, cfg.height, cfg.width)) < cfg.density).astype(np.uint8)
    warm = rng.random(count) < cfg.warmup_prob
    if cfg.warmup_steps > 0 and warm.any():
        for _ in range(cfg.warmup_steps):
            cells[warm] = step(cells[warm])
    return cells


def random_grid(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    return random_grids(cfg, rng, 1)[0]


def sample_sequences(
    cfg: GenConfig, rng: np.random.Generator, count: int, gol_timesteps: int
) -> np.ndarray:
    """Random ground-truth sequences, shape ``(count, gol_timesteps + 1, H, W)``."""
    return evolve(random_grids(cfg, rng, count), gol_timesteps)


@dataclass(frozen=True, eq=False)
class Example:
    """One training pair plus the full sequence between its ends."""

    truth: np.ndarray  # (m, H, W)

    def __post_init__(self):
        if self.truth.ndim != 3 or self.truth.shape[0] < 2:
            raise ValueError("truth must hold at least two states")
        self.truth.setflags(write=False)

    @property
    def first(self) -> np.ndarray:
        return self.truth[0]

    @property
    def target(self) -> np.ndarray:
        return self.truth[-1]

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return self.truth.shape == other.truth.shape and np.array_equal(self.truth, other.truth)


def make_dataset(cfg: GenConfig, count: int, gol_timesteps: int) -> list[Example]:
    """``count`` examples, reproducible from ``cfg.seed`` alone."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if gol_timesteps < 1:
        raise ValueError(f"gol_timesteps must be >= 1, got {gol_timesteps}")
    seqs = sample_sequences(cfg, cfg.rng(), count, gol_timesteps)
    return [Example(s) for s in seqs]


def stack_truth(examples: list[Example]) -> np.ndarray:
    return np.stack([e.truth for e in examples])


def shift(g: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Cyclic translation by ``dx`` columns and ``dy`` rows."""
    return np.roll(np.roll(g, dy, axis=-2), dx, axis=-1)
