"""Training regimes and the evaluation that goes with them.

``train_main`` fits the whole network to predict the last state, optionally
averaging in an autoencoder loss on the first state. ``train_adversarial``
then fine-tunes only the decoder against a discriminator so that decoded
hidden states look like real Game of Life states; the encoder and RNN
blocks are run without gradients and never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import life
from . import model as M
from . import tensor as T
from .metric import MATCH_THRESHOLD, MatchReport, metric
from .optim import Adam


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_steps: int = 20000
    eval_interval: int = 100
    use_autoencoder: bool = True
    accuracy_gate: float = 0.99
    emergence_threshold: float = 0.98
    early_stop_accuracy: float = 0.995
    eval_set_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.accuracy_gate <= 1 or not 0 < self.emergence_threshold <= 1:
            raise ValueError("accuracy_gate and emergence_threshold must lie in (0, 1]")
        for name in ("batch_size", "max_steps", "eval_interval", "eval_set_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class AdvConfig:
    disc_learning_rate: float = 1e-3
    adv_steps: int = 2000
    # final-prediction, autoencoder, generator
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "loss_weights", tuple(float(w) for w in self.loss_weights))
        if len(self.loss_weights) != 3:
            raise ValueError("loss_weights needs three entries")
        if any(w < 0 for w in self.loss_weights) or not any(self.loss_weights):
            raise ValueError("loss_weights must be non-negative and not all zero")
        if self.adv_steps < 1 or self.disc_learning_rate <= 0:
            raise ValueError("adv_steps and disc_learning_rate must be positive")


@dataclass
class EvalPoint:
    step: int
    final_accuracy: float
    intermediate_accuracy: list[float | None]


@dataclass
class RunRecord:
    loss_history: list[tuple[int, float, float | None]] = field(default_factory=list)
    evals: list[EvalPoint] = field(default_factory=list)
    final_accuracy: float = 0.0
    gate_passed: bool = False
    # first eval step at which decoded h_i reached the emergence threshold
    emergence_steps: list[int | None] = field(default_factory=list)
    final_emergence_step: int | None = None
    steps_run: int = 0
    checkpoint: str | None = None
    # adversarial phase only: (step, disc_loss, gen_loss, disc_accuracy)
    adv_history: list[tuple[int, float, float, float]] = field(default_factory=list)
    initial_disc_accuracy: float | None = None


class DataSource(Protocol):
    gol_timesteps: int

    def batch(self, size: int) -> np.ndarray:
        """Truth sequences ``[size, m, H, W]``."""

    def eval_set(self, size: int) -> np.ndarray:
        ...


class StreamSource:
    """Fresh random sequences for every batch; a separate stream feeds the eval split."""

    def __init__(self, gen: life.GenConfig, gol_timesteps: int):
        self.gen = gen
        self.gol_timesteps = gol_timesteps
        self.shape = (gen.height, gen.width)
        self._rng = gen.rng(1)

    def batch(self, size: int) -> np.ndarray:
        return life.sample_sequences(self.gen, self._rng, size, self.gol_timesteps)

    def eval_set(self, size: int) -> np.ndarray:
        return life.sample_sequences(self.gen, self.gen.rng(2), size, self.gol_timesteps)


class FixedSource:
    """Minibatches drawn with replacement from a fixed list of examples."""

    def __init__(self, examples: list[life.Example], seed: int = 0):
        self.truth = life.stack_truth(examples)
        self.gol_timesteps = self.truth.shape[1] - 1
        self.shape = self.truth.shape[2:]
        self._rng = np.random.default_rng([seed, 1])

    def batch(self, size: int) -> np.ndarray:
        return self.truth[self._rng.integers(0, len(self.truth), size)]

    def eval_set(self, size: int) -> np.ndarray:
        return self.truth[:size]


# -- measurements ---------------------------------------------------------------------


def threshold(image, tau: float = 0.5) -> np.ndarray:
    """Binarise network output: 1 where value > tau. Channel axis of size 1 is dropped."""
    arr = image.data if isinstance(image, T.Tensor) else np.asarray(image)
    if arr.ndim == 4:
        if arr.shape[1] != 1:
            raise ValueError("threshold expects a single channel")
        arr = arr[:, 0]
    return (arr > tau).astype(np.uint8)


def pixel_accuracy(pred, target) -> float:
    """Fraction of cells where the thresholded prediction equals the target grid."""
    p = threshold(pred)
    t = np.asarray(target)
    if t.ndim == 4:
        t = t[:, 0]
    if p.shape != t.shape:
        raise ValueError(f"prediction {p.shape} and target {t.shape} differ in shape")
    return float(np.mean(p == t))


def _images(a: np.ndarray, dtype) -> T.Tensor:
    return T.Tensor(a[:, None], dtype=dtype)


def _check_source(params: M.NetworkParams, truth: np.ndarray) -> None:
    cfg = params.config
    if truth.shape[2:] != (cfg.grid_height, cfg.grid_width):
        raise ValueError(
            f"data grids are {truth.shape[2]}x{truth.shape[3]}, "
            f"model expects {cfg.grid_height}x{cfg.grid_width}"
        )


def infer(params: M.NetworkParams, truth: np.ndarray, chunk: int = 256):
    """Thresholded decodings ``[N, t-1, H, W]`` and final predictions ``[N, H, W]`` for ``truth[:, 0]``."""
    decoded, final = [], []
    with T.no_grad():
        for lo in range(0, len(truth), chunk):
            tr = M.forward_inference(params, _images(truth[lo:lo + chunk, 0], params.dtype))
            decoded.append(np.stack([threshold(d) for d in tr.decoded], axis=1))
            final.append(threshold(tr.final_pred))
    return np.concatenate(decoded), np.concatenate(final)


def evaluate(params: M.NetworkParams, truth: np.ndarray, step: int = 0) -> EvalPoint:
    """Final-state accuracy and, when model and GoL timesteps agree, per-intermediate accuracy."""
    decoded, final = infer(params, truth)
    final_acc = float(np.mean(final == truth[:, -1]))
    inter: list[float | None] = []
    aligned = params.config.model_timesteps == truth.shape[1] - 1
    for i in range(decoded.shape[1]):
        inter.append(float(np.mean(decoded[:, i] == truth[:, i + 1])) if aligned else None)
    return EvalPoint(step, final_acc, inter)


def evaluate_metric(params: M.NetworkParams, truth: np.ndarray,
                    match_threshold: float = MATCH_THRESHOLD) -> list[MatchReport]:
    decoded, _ = infer(params, truth)
    return [metric(d, s, match_threshold) for d, s in zip(decoded, truth)]


def _record_eval(rec: RunRecord, point: EvalPoint, thr: float) -> None:
    rec.evals.append(point)
    if not rec.emergence_steps:
        rec.emergence_steps = [None] * len(point.intermediate_accuracy)
    for i, acc in enumerate(point.intermediate_accuracy):
        if acc is not None and acc >= thr and rec.emergence_steps[i] is None:
            rec.emergence_steps[i] = point.step
    if point.final_accuracy >= thr and rec.final_emergence_step is None:
        rec.final_emergence_step = point.step


def _finite(loss: T.Tensor) -> None:
    if not np.isfinite(loss.data):
        raise FloatingPointError(f"loss became {loss.item()}")


# -- regimes --------------------------------------------------------------------------


def training_loss(params: M.NetworkParams, truth: np.ndarray, use_autoencoder: bool):
    """``(loss, main, ae)``; with the autoencoder the loss is the mean of the two mse terms."""
    x = _images(truth[:, 0], params.dtype)
    zs = M.hidden_states(params, x)
    main = T.mse_loss(M.decode(params, zs[-1]), _images(truth[:, -1], params.dtype))
    if not use_autoencoder:
        return main, main, None
    ae = T.mse_loss(M.decode(params, zs[0]), x)
    return T.scale(T.add(main, ae), 0.5), main, ae


def train_main(
    params: M.NetworkParams,
    cfg: TrainConfig,
    source: DataSource,
    on_eval: Callable[[int, EvalPoint], None] | None = None,
) -> RunRecord:
    batch0 = source.batch(1)
    _check_source(params, batch0)
    eval_truth = source.eval_set(cfg.eval_set_size)
    opt = Adam(params.parameters(), lr=cfg.learning_rate)
    rec = RunRecord()
    step = 0
    for step in range(1, cfg.max_steps + 1):
        loss, main, ae = training_loss(params, source.batch(cfg.batch_size), cfg.use_autoencoder)
        rec.loss_history.append((step, main.item(), None if ae is None else ae.item()))
        _finite(loss)
        T.backward(loss)
        opt.step()

        if step % cfg.eval_interval == 0 or step == cfg.max_steps:
            point = evaluate(params, eval_truth, step)
            _record_eval(rec, point, cfg.emergence_threshold)
            if on_eval is not None:
                on_eval(step, point)
            if point.final_accuracy >= cfg.early_stop_accuracy:
                break
    rec.steps_run = step
    if not rec.evals or rec.evals[-1].step != step:
        _record_eval(rec, evaluate(params, eval_truth, step), cfg.emergence_threshold)
    rec.final_accuracy = rec.evals[-1].final_accuracy
    rec.gate_passed = rec.final_accuracy >= cfg.accuracy_gate
    params.trained_steps += step
    params.pretrained = True
    return rec


def _disc_accuracy(p_real: np.ndarray, p_fake: np.ndarray) -> float:
    return float((np.sum(p_real > 0.5) + np.sum(p_fake <= 0.5)) / (p_real.size + p_fake.size))


def train_adversarial(
    params: M.NetworkParams,
    cfg: TrainConfig,
    adv: AdvConfig,
    source: DataSource,
) -> RunRecord:
    """GAN-style fine-tuning of the decoder on top of a frozen, pretrained backbone."""
    if not params.pretrained:
        raise RuntimeError("adversarial training needs a pretrained network (run train_main first)")
    _check_source(params, source.batch(1))
    disc = params.ensure_discriminator()
    disc_params = disc.parameters()
    disc_opt = Adam(disc_params, lr=adv.disc_learning_rate)
    dec_opt = Adam(params.decoder_parameters(), lr=cfg.learning_rate)
    rng = np.random.default_rng([cfg.seed, 0xAD])
    w_final, w_ae, w_gen = adv.loss_weights
    if not cfg.use_autoencoder:
        w_ae = 0.0
    dtype = params.dtype
    rec = RunRecord()

    def real_images(count: int) -> T.Tensor:
        seqs = source.batch(count)
        idx = rng.integers(0, seqs.shape[1], count)
        return _images(seqs[np.arange(count), idx], dtype)

    def backbone(truth):
        with T.no_grad():
            return M.hidden_states(params, _images(truth[:, 0], dtype))

    for step in range(1, adv.adv_steps + 1):
        truth = source.batch(cfg.batch_size)
        zs = backbone(truth)
        inter = zs[1:-1]

        # discriminator update; decoded states are constants here
        with T.no_grad():
            fake = T.concat([M.decode(params, z) for z in inter], axis=0)
        real = real_images(fake.shape[0])
        p_real = M.discriminate(params, real)
        p_fake = M.discriminate(params, fake)
        if step == 1:
            rec.initial_disc_accuracy = _disc_accuracy(p_real.data, p_fake.data)
        d_loss = T.scale(T.add(T.bce_loss(p_real, np.ones_like(p_real.data)),
                               T.bce_loss(p_fake, np.zeros_like(p_fake.data))), 0.5)
        _finite(d_loss)
        T.backward(d_loss)
        disc_opt.step()

        # decoder update; grads reaching the discriminator are discarded
        decoded = T.concat([M.decode(params, z) for z in inter], axis=0)
        p_gen = M.discriminate(params, decoded)
        gen = T.bce_loss(p_gen, np.ones_like(p_gen.data))
        terms = [T.scale(gen, w_gen)]
        if w_final:
            terms.append(T.scale(T.mse_loss(M.decode(params, zs[-1]), _images(truth[:, -1], dtype)), w_final))
        if w_ae:
            terms.append(T.scale(T.mse_loss(M.decode(params, zs[0]), _images(truth[:, 0], dtype)), w_ae))
        total = terms[0]
        for term in terms[1:]:
            total = T.add(total, term)
        total = T.scale(total, 1.0 / 3.0)
        _finite(total)
        T.backward(total)
        for p in disc_params:
            p.grad = None
        dec_opt.step()

        rec.adv_history.append((step, d_loss.item(), gen.item(),
                                _disc_accuracy(p_real.data, p_fake.data)))
    rec.steps_run = adv.adv_steps
    return rec
