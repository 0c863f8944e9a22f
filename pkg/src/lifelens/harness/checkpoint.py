"""Binary checkpoints of named tensors.

Layout (little-endian)::

    b"LLNS"  u32 version
    u32 config length, config bytes (UTF-8 JSON: model config, step, extras)
    u32 tensor count
    per tensor: u16 name length, name bytes, u8 rank, u32 dims[rank], f32 data
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from ..model import ModelConfig, NetworkParams, init_params
from ..optim import Adam

MAGIC = b"LLNS"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode(tensors: dict[str, np.ndarray], meta: dict) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", VERSION))
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)
    out.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        raw = name.encode("utf-8")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        out.write(struct.pack("<B", arr.ndim))
        out.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return out.getvalue()


def decode(buf: bytes) -> tuple[dict[str, np.ndarray], dict]:
    view = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError("truncated checkpoint")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (n_meta,) = struct.unpack("<I", take(4))
    meta = json.loads(bytes(take(n_meta)).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (n_name,) = struct.unpack("<H", take(2))
        name = bytes(take(n_name)).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(dims)) if rank else 1
        data = np.frombuffer(take(4 * n), dtype="<f4").reshape(dims)
        tensors[name] = data.copy()
    if pos != len(view):
        raise CheckpointError("trailing bytes after last tensor")
    return tensors, meta


def params_to_checkpoint(params: NetworkParams, step: int = 0, optimizer: Adam | None = None,
                         extra: dict | None = None) -> bytes:
    tensors = dict(params.named_arrays())
    meta = {
        "model": params.config.to_dict(),
        "seed": params.seed,
        "step": step,
        "trained_steps": params.trained_steps,
        "pretrained": params.pretrained,
        "has_discriminator": params.discriminator is not None,
        "extra": extra or {},
    }
    if optimizer is not None:
        tensors.update(optimizer.state_arrays())
        meta["optimizer"] = {"t": optimizer.t, "lr": optimizer.lr, "beta1": optimizer.beta1,
                             "beta2": optimizer.beta2, "eps": optimizer.eps}
    return encode(tensors, meta)


def params_from_checkpoint(buf: bytes) -> tuple[NetworkParams, dict, dict[str, np.ndarray]]:
    """Rebuild the network; returns ``(params, meta, optimizer_arrays)``."""
    tensors, meta = decode(buf)
    cfg = ModelConfig.from_dict(meta["model"])
    params = init_params(cfg, seed=meta.get("seed", 0), dtype=np.float32)
    if meta.get("has_discriminator"):
        params.ensure_discriminator()
    for p in params.all_parameters():
        if p.name not in tensors:
            raise CheckpointError(f"checkpoint lacks tensor {p.name!r}")
        if tensors[p.name].shape != p.shape:
            raise CheckpointError(f"tensor {p.name!r} has shape {tensors[p.name].shape}, expected {p.shape}")
        p.data[...] = tensors[p.name]
    params.trained_steps = meta.get("trained_steps", 0)
    params.pretrained = meta.get("pretrained", False)
    opt_arrays = {k: v for k, v in tensors.items() if k.startswith("adam.")}
    return params, meta, opt_arrays


def save(path, params: NetworkParams, step: int = 0, optimizer: Adam | None = None,
         extra: dict | None = None) -> None:
    Path(path).write_bytes(params_to_checkpoint(params, step, optimizer, extra))


def load(path) -> tuple[NetworkParams, dict, dict[str, np.ndarray]]:
    return params_from_checkpoint(Path(path).read_bytes())

