"""Encoder -> recurrent conv block x t -> decoder, plus a small discriminator.

The encoder lifts a one-channel grid to ``channels`` feature maps. The same
block (or, with ``weight_sharing=False``, one block per timestep) is applied
``model_timesteps`` times, and the decoder maps any hidden state back to a
one-channel image in (0, 1). Training only ever decodes the last hidden
state; inference also decodes the intermediate ones.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from . import tensor as T
from .tensor import Parameter, Tensor

DISC_CHANNELS = 16
# shrink the discriminator head so an untrained critic starts out undecided
DISC_HEAD_GAIN = 0.1


@dataclass(frozen=True)
class ModelConfig:
    grid_height: int = 16
    grid_width: int = 16
    channels: int = 20
    encoder_layers: int = 1
    decoder_layers: int = 1
    rnn_layers_per_block: int = 2
    kernel_size: int = 3
    model_timesteps: int = 2
    weight_sharing: bool = True
    # per-layer overrides of kernel_size; None means kernel_size everywhere
    encoder_kernel: int | None = None
    decoder_kernel: int | None = None
    rnn_kernels: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("grid_height", "grid_width", "channels", "encoder_layers",
                     "decoder_layers", "rnn_layers_per_block", "kernel_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.rnn_kernels is not None:
            object.__setattr__(self, "rnn_kernels", tuple(self.rnn_kernels))
            if len(self.rnn_kernels) != self.rnn_layers_per_block:
                raise ValueError("rnn_kernels needs one entry per block layer")
        for k in (self.kernel_size, self.encoder_kernel, self.decoder_kernel, *(self.rnn_kernels or ())):
            if k is not None and (k < 1 or k % 2 == 0):
                raise ValueError(f"kernel sizes must be odd and positive, got {k}")
        if self.model_timesteps < 2:
            raise ValueError("model_timesteps must be >= 2 so an intermediate state exists")

    @property
    def encoder_k(self) -> int:
        return self.encoder_kernel or self.kernel_size

    @property
    def decoder_k(self) -> int:
        return self.decoder_kernel or self.kernel_size

    @property
    def rnn_k(self) -> tuple[int, ...]:
        return self.rnn_kernels or (self.kernel_size,) * self.rnn_layers_per_block

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["rnn_kernels"] is not None:
            d["rnn_kernels"] = list(d["rnn_kernels"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class ConvLayer:
    weight: Parameter
    bias: Parameter

    def __call__(self, x: Tensor) -> Tensor:
        return T.conv2d_circular(x, self.weight, self.bias)


@dataclass
class Discriminator:
    convs: list[ConvLayer]
    head_weight: Parameter
    head_bias: Parameter

    def parameters(self) -> list[Parameter]:
        out = []
        for layer in self.convs:
            out += [layer.weight, layer.bias]
        return out + [self.head_weight, self.head_bias]


@dataclass
class NetworkParams:
    config: ModelConfig
    encoder: list[ConvLayer]
    rnn_blocks: list[list[ConvLayer]]
    decoder: list[ConvLayer]
    discriminator: Discriminator | None = None
    seed: int = 0
    pretrained: bool = False
    trained_steps: int = 0

    def block_for(self, timestep: int) -> list[ConvLayer]:
        return self.rnn_blocks[0] if self.config.weight_sharing else self.rnn_blocks[timestep]

    def encoder_parameters(self) -> list[Parameter]:
        return _flatten(self.encoder)

    def rnn_parameters(self) -> list[Parameter]:
        return [p for block in self.rnn_blocks for p in _flatten(block)]

    def decoder_parameters(self) -> list[Parameter]:
        return _flatten(self.decoder)

    def backbone_parameters(self) -> list[Parameter]:
        return self.encoder_parameters() + self.rnn_parameters()

    def parameters(self) -> list[Parameter]:
        """Encoder, RNN and decoder parameters (the discriminator is separate)."""
        return self.backbone_parameters() + self.decoder_parameters()

    def all_parameters(self) -> list[Parameter]:
        disc = self.discriminator.parameters() if self.discriminator else []
        return self.parameters() + disc

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.all_parameters()}

    def count(self) -> int:
        return sum(p.size for p in self.parameters())

    def clone(self) -> "NetworkParams":
        return copy.deepcopy(self)

    def ensure_discriminator(self) -> Discriminator:
        if self.discriminator is None:
            rng = np.random.default_rng([self.seed, 0xD15C])
            self.discriminator = _init_discriminator(rng, self.config.kernel_size, self.dtype)
        return self.discriminator

    @property
    def dtype(self):
        return self.encoder[0].weight.dtype


def _flatten(layers: list[ConvLayer]) -> list[Parameter]:
    out = []
    for layer in layers:
        out += [layer.weight, layer.bias]
    return out


def _conv(rng, name: str, cin: int, cout: int, k: int, dtype) -> ConvLayer:
    w = T.fan_in_normal(rng, (cout, cin, k, k))
    return ConvLayer(Parameter(f"{name}.weight", w, dtype), Parameter(f"{name}.bias", np.zeros(cout), dtype))


def _stack(rng, prefix: str, widths: list[int], ks, dtype) -> list[ConvLayer]:
    if isinstance(ks, int):
        ks = [ks] * (len(widths) - 1)
    return [_conv(rng, f"{prefix}.{i}", widths[i], widths[i + 1], ks[i], dtype) for i in range(len(widths) - 1)]


def _init_discriminator(rng, k: int, dtype) -> Discriminator:
    convs = [_conv(rng, "disc.conv0", 1, DISC_CHANNELS, k, dtype),
             _conv(rng, "disc.conv1", DISC_CHANNELS, DISC_CHANNELS, k, dtype)]
    w = T.fan_in_normal(rng, (1, DISC_CHANNELS)) * DISC_HEAD_GAIN
    return Discriminator(convs, Parameter("disc.head.weight", w, dtype), Parameter("disc.head.bias", np.zeros(1), dtype))


def init_params(cfg: ModelConfig, seed: int = 0, dtype=None) -> NetworkParams:
    """Fresh He-normal weights and zero biases; deterministic in ``seed``.

    The discriminator is only created on demand (see ``ensure_discriminator``).
    """
    dtype = np.dtype(dtype or T.default_dtype())
    rng = np.random.default_rng(seed)
    c = cfg.channels
    encoder = _stack(rng, "encoder", [1] + [c] * cfg.encoder_layers, cfg.encoder_k, dtype)
    n_blocks = 1 if cfg.weight_sharing else cfg.model_timesteps
    blocks = [_stack(rng, f"rnn.{b}", [c] * (cfg.rnn_layers_per_block + 1), cfg.rnn_k, dtype)
              for b in range(n_blocks)]
    decoder = _stack(rng, "decoder", [c] * cfg.decoder_layers + [1], cfg.decoder_k, dtype)
    return NetworkParams(cfg, encoder, blocks, decoder, seed=seed)


# -- forward passes -----------------------------------------------------------------


def _check_input(params: NetworkParams, x) -> Tensor:
    x = x if isinstance(x, Tensor) else Tensor(np.asarray(x), dtype=params.dtype)
    cfg = params.config
    if x.data.ndim == 3:
        x = Tensor(x.data[:, None], dtype=params.dtype)
    if x.data.ndim != 4 or x.shape[1] != 1:
        raise ValueError(f"expected a batch shaped [B, 1, H, W], got {x.shape}")
    if x.shape[2:] != (cfg.grid_height, cfg.grid_width):
        raise ValueError(
            f"grid is {x.shape[2]}x{x.shape[3]}, model expects {cfg.grid_height}x{cfg.grid_width}"
        )
    return x


def encode(params: NetworkParams, x: Tensor) -> Tensor:
    for layer in params.encoder:
        x = T.relu(layer(x))
    return x


def rnn_step(params: NetworkParams, z: Tensor, timestep: int) -> Tensor:
    for layer in params.block_for(timestep):
        z = T.relu(layer(z))
    return z


def decode(params: NetworkParams, z: Tensor) -> Tensor:
    *hidden, last = params.decoder
    for layer in hidden:
        z = T.relu(layer(z))
    return T.sigmoid(last(z))


def hidden_states(params: NetworkParams, x) -> list[Tensor]:
    """``[z_0, z_1, ..., z_t]``: encoder output followed by each RNN timestep output."""
    x = _check_input(params, x)
    zs = [encode(params, x)]
    for step in range(params.config.model_timesteps):
        zs.append(rnn_step(params, zs[-1], step))
    return zs


def forward_train(params: NetworkParams, x) -> tuple[Tensor, Tensor]:
    """Final prediction ``decode(rnn^t(encode(x)))`` and reconstruction ``decode(encode(x))``."""
    zs = hidden_states(params, x)
    return decode(params, zs[-1]), decode(params, zs[0])


@dataclass
class ForwardTrace:
    h: list[Tensor]          # intermediate RNN outputs h_1 .. h_{t-1}
    decoded: list[Tensor]    # decode(h_i), same order
    final_pred: Tensor
    recon: Tensor | None = None


def forward_inference(params: NetworkParams, x, with_recon: bool = False) -> ForwardTrace:
    """Decode every intermediate hidden state.

    The encoder output and the final timestep are left out of ``decoded``:
    those are already trained to match the first and last states.
    """
    zs = hidden_states(params, x)
    h = zs[1:-1]
    decoded = [decode(params, z) for z in h]
    recon = decode(params, zs[0]) if with_recon else None
    return ForwardTrace(h=h, decoded=decoded, final_pred=decode(params, zs[-1]), recon=recon)


def discriminate(params: NetworkParams, image) -> Tensor:
    """Probability, per image, that it is a real Game of Life state: [B, 1, H, W] -> [B, 1]."""
    d = params.discriminator
    if d is None:
        raise RuntimeError("discriminator not initialised; call ensure_discriminator() first")
    x = image if isinstance(image, Tensor) else Tensor(np.asarray(image), dtype=params.dtype)
    for layer in d.convs:
        x = T.relu(layer(x))
    return T.sigmoid(T.dense(T.global_mean_pool(x), d.head_weight, d.head_bias))


# -- hand-built Game of Life weights ------------------------------------------------

# Channel 0 of every hidden state holds the grid itself. The first block layer
# computes v = 2 * neighbours + self and four ramps relu(v - o); the second
# layer combines them into the indicator of v in {5, 6, 7}, which is exactly
# "born with 3, survives with 2 or 3".
_RAMP_OFFSETS = (4.0, 5.0, 7.0, 8.0)
_RAMP_SIGNS = (1.0, -1.0, -1.0, 1.0)
DECODER_GAIN = 10.0


def _identity(layer: ConvLayer, gain: float = 1.0) -> None:
    c = layer.weight.shape[-1] // 2
    layer.weight.data[0, 0, c, c] = gain


def construct_gol_step_params(cfg: ModelConfig, dtype=None) -> NetworkParams:
    """Weights for which one block + decode + threshold is exactly one GoL step."""
    if cfg.rnn_k[0] != 3:
        raise RuntimeError("hand-built GoL weights need a 3x3 first block layer")
    if cfg.rnn_layers_per_block < 2:
        raise RuntimeError("hand-built GoL weights need at least 2 layers per block")
    if cfg.channels < len(_RAMP_OFFSETS):
        raise RuntimeError(f"hand-built GoL weights need at least {len(_RAMP_OFFSETS)} channels")
    params = init_params(cfg, seed=0, dtype=dtype)
    for p in params.parameters():
        p.data[...] = 0.0

    for layer in params.encoder + params.decoder[:-1]:
        _identity(layer)
    for block in params.rnn_blocks:
        first, second, *rest = block
        stencil = np.full((3, 3), 2.0)
        stencil[1, 1] = 1.0
        for c, off in enumerate(_RAMP_OFFSETS):
            first.weight.data[c, 0] = stencil
            first.bias.data[c] = -off
        mid = second.weight.shape[-1] // 2
        for c, sign in enumerate(_RAMP_SIGNS):
            second.weight.data[0, c, mid, mid] = sign
        for layer in rest:
            _identity(layer)
    last = params.decoder[-1]
    _identity(last, DECODER_GAIN)
    last.bias.data[0] = -DECODER_GAIN / 2
    params.pretrained = True
    return params
