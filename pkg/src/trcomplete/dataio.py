"""File formats: raw tensors, chains, and binary PGM/PPM images.

Tensor files start with the magic line ``TRT1``, then an ASCII header line
``n d1 ... dn``, then little-endian float64 data in the canonical
first-index-fastest order. Chain files use magic ``TRC1`` with header
``n R0 ... Rn d1 ... dn`` followed by the cores concatenated in order, each
in the same scalar encoding.

Images are binary 8-bit PGM (P5) or PPM (P6). Pixel bytes are scaled to
[0, 1] and the raster byte stream maps directly onto the canonical linear
order of an (H, W) or (H, W, 3) tensor; saving inverts the mapping after
clamping to [0, 1] and rounding to 8 bits, so load/save round-trips are
exact.
"""

from __future__ import annotations

import math

import numpy as np

from .ring import TRChain
from .tensors import ensure_tensor, validate_shape, vectorize

__all__ = [
    "DataFormatError",
    "save_tensor",
    "load_tensor",
    "save_chain",
    "load_chain",
    "save_image",
    "load_image",
    "load_any",
]

TENSOR_MAGIC = b"TRT1"
CHAIN_MAGIC = b"TRC1"


class DataFormatError(ValueError):
    """Malformed or unsupported input file."""


def _read_line(f) -> bytes:
    line = f.readline()
    if not line.endswith(b"\n"):
        raise DataFormatError("truncated header")
    return line.strip()


def _read_ints(f, expect_at_least: int) -> list[int]:
    try:
        values = [int(v) for v in _read_line(f).split()]
    except ValueError as exc:
        raise DataFormatError(f"bad header: {exc}") from None
    if len(values) < expect_at_least:
        raise DataFormatError("header too short")
    return values


def _read_floats(f, count: int) -> np.ndarray:
    data = f.read(count * 8)
    if len(data) != count * 8:
        raise DataFormatError(f"expected {count} float64 values, file too short")
    return np.frombuffer(data, dtype="<f8").astype(np.float64)


def save_tensor(t, path):
    t = ensure_tensor(t)
    with open(path, "wb") as f:
        f.write(TENSOR_MAGIC + b"\n")
        f.write((" ".join([str(t.ndim)] + [str(d) for d in t.shape]) + "\n").encode())
        f.write(vectorize(t).astype("<f8").tobytes())


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        if _read_line(f) != TENSOR_MAGIC:
            raise DataFormatError(f"{path}: not a tensor file")
        header = _read_ints(f, 1)
        n, dims = header[0], header[1:]
        if len(dims) != n:
            raise DataFormatError(f"{path}: header lists {len(dims)} dims, expected {n}")
        dims = validate_shape(dims)
        data = _read_floats(f, math.prod(dims))
    return data.reshape(dims, order="F")


def save_chain(chain: TRChain, path):
    ranks, dims = chain.ranks, chain.dims
    with open(path, "wb") as f:
        f.write(CHAIN_MAGIC + b"\n")
        fields = [chain.order, *ranks, *dims]
        f.write((" ".join(str(v) for v in fields) + "\n").encode())
        for core in chain.cores:
            f.write(vectorize(core).astype("<f8").tobytes())


def load_chain(path) -> TRChain:
    with open(path, "rb") as f:
        if _read_line(f) != CHAIN_MAGIC:
            raise DataFormatError(f"{path}: not a chain file")
        header = _read_ints(f, 2)
        n = header[0]
        if len(header) != 1 + (n + 1) + n:
            raise DataFormatError(f"{path}: header length does not match order {n}")
        ranks, dims = header[1:n + 2], header[n + 2:]
        cores = []
        for i in range(n):
            shape = (ranks[i], dims[i], ranks[i + 1])
            data = _read_floats(f, math.prod(shape))
            cores.append(data.reshape(shape, order="F"))
    try:
        return TRChain(cores)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _next_token(f) -> bytes:
    # whitespace-separated header tokens; '#' starts a comment to end of line
    token = b""
    while True:
        c = f.read(1)
        if not c:
            if token:
                return token
            raise DataFormatError("truncated image header")
        if c == b"#" and not token:
            while c and c != b"\n":
                c = f.read(1)
            continue
        if c.isspace():
            if token:
                return token
            continue
        token += c


def load_image(path) -> np.ndarray:
    """Read a binary PGM/PPM file into an (H, W) or (H, W, 3) tensor in [0, 1]."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic not in (b"P5", b"P6"):
            raise DataFormatError(f"{path}: unsupported image magic {magic!r}")
        try:
            width = int(_next_token(f))
            height = int(_next_token(f))
            maxval = int(_next_token(f))
        except ValueError as exc:
            raise DataFormatError(f"{path}: bad image header: {exc}") from None
        if width < 1 or height < 1:
            raise DataFormatError(f"{path}: bad image size {width}x{height}")
        if not 0 < maxval < 256:
            raise DataFormatError(f"{path}: only 8-bit images supported, maxval {maxval}")
        channels = 3 if magic == b"P6" else 1
        count = width * height * channels
        raster = f.read(count)
        if len(raster) != count:
            raise DataFormatError(f"{path}: raster too short")
    shape = (height, width) if channels == 1 else (height, width, 3)
    values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / maxval
    return values.reshape(shape, order="F")


def save_image(t, path):
    """Write an (H, W) tensor as PGM or an (H, W, 3) tensor as PPM.

    Values are clamped to [0, 1] and rounded to 8 bits.
    """
    t = ensure_tensor(t)
    if t.ndim == 2:
        magic, (height, width) = b"P5", t.shape
    elif t.ndim == 3 and t.shape[2] == 3:
        magic, (height, width, _) = b"P6", t.shape
    else:
        raise ValueError(f"image tensor must be (H, W) or (H, W, 3), got {t.shape}")
    raster = np.rint(np.clip(vectorize(t), 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{width} {height}\n255\n".encode())
        f.write(raster.tobytes())


def load_any(path):
    """Load a tensor or image by magic; returns (tensor, kind)."""
    with open(path, "rb") as f:
        head = f.read(4)
    if head == TENSOR_MAGIC:
        return load_tensor(path), "tensor"
    if head[:2] == b"P5":
        return load_image(path), "pgm"
    if head[:2] == b"P6":
        return load_image(path), "ppm"
    raise DataFormatError(f"{path}: unrecognized file format")
