"""On-disk formats for datasets and grid images.

Dataset file (little-endian)::

    offset  size  field
    0       4     magic b"GOLD"
    4       4     format version (u32)
    8       2     width (u16)
    10      2     height (u16)
    12      4     record count (u32)
    16      ...   records

Each record is ``m`` grids, each grid bit-packed row-major with the most
significant bit first and padded to a whole byte. The header has no field for
``m``; readers recover it from the payload size.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .life import Example, as_grid

DATASET_MAGIC = b"GOLD"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sIHHI")


class FormatError(ValueError):
    pass


def _grid_bytes(height: int, width: int) -> int:
    return (height * width + 7) // 8


def encode_dataset(examples: list[Example]) -> bytes:
    if not examples:
        raise ValueError("cannot encode an empty dataset")
    truth = np.stack([e.truth for e in examples])  # (count, m, H, W)
    count, m, h, w = truth.shape
    flat = truth.reshape(count * m, h * w)
    packed = np.packbits(flat, axis=1, bitorder="big")
    header = _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, w, h, count)
    return header + packed.tobytes()


def decode_dataset(buf: bytes) -> list[Example]:
    if len(buf) < _HEADER.size:
        raise FormatError("file shorter than dataset header")
    magic, version, w, h, count = _HEADER.unpack_from(buf)
    if magic != DATASET_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if count == 0 or w == 0 or h == 0:
        raise FormatError("dataset header has zero count or size")
    per_grid = _grid_bytes(h, w)
    payload = len(buf) - _HEADER.size
    if payload % (count * per_grid):
        raise FormatError("payload size is not a whole number of records")
    m = payload // (count * per_grid)
    if m < 2:
        raise FormatError("records must hold at least two states")
    raw = np.frombuffer(buf, dtype=np.uint8, offset=_HEADER.size).reshape(count * m, per_grid)
    bits = np.unpackbits(raw, axis=1, count=h * w, bitorder="big")
    truth = bits.reshape(count, m, h, w)
    return [Example(t.copy()) for t in truth]


def save_dataset(path, examples: list[Example]) -> None:
    Path(path).write_bytes(encode_dataset(examples))


def load_dataset(path) -> list[Example]:
    return decode_dataset(Path(path).read_bytes())


def encode_pgm(image: np.ndarray) -> bytes:
    """Binary P5 greymap. 0/1 grids map to bytes 0/255; float images in [0, 1] are scaled."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D image, got shape {img.shape}")
    if np.issubdtype(img.dtype, np.floating):
        data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    else:
        data = as_grid(img) * np.uint8(255)
    h, w = data.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def decode_pgm(buf: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            pos = buf.index(b"\n", pos) + 1
            continue
        end = pos
        while not buf[end:end + 1].isspace():
            end += 1
        tokens.append(buf[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise FormatError("not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError("only 8-bit PGM is supported")
    pos += 1  # single whitespace after maxval
    return np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w)


def save_pgm(path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(image))


def image_strip(images: list[np.ndarray], gap: int = 1) -> np.ndarray:
    """Lay equally sized images side by side with a mid-grey separator column."""
    if not images:
        raise ValueError("no images to lay out")
    h = images[0].shape[0]
    cols = []
    sep = np.full((h, gap), 0.5)
    for k, img in enumerate(images):
        if k:
            cols.append(sep)
        cols.append(np.asarray(img, dtype=np.float64))
    return np.concatenate(cols, axis=1)
