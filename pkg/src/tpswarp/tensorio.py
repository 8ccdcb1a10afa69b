"""TNSR, the little binary format for shipping n-dimensional float arrays.

Layout, all little-endian:

    bytes 0..3   magic "TNSR"
    u32          version (1)
    u32          rank
    rank x u32   dimension sizes
    then prod(dims) float32 values in row-major order.

Rank 0 is a single scalar with no dimension words.  Arrays load as float64
so downstream math runs at full precision; writing casts back to float32.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

TENSOR_MAGIC = b"TNSR"
TENSOR_VERSION = 1
MAX_RANK = 8

_PREFIX = struct.Struct("<4sII")


def write_tensor(array, path) -> None:
    """Write an array (or scalar) as a TNSR file."""
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim > MAX_RANK:
        raise ValueError(f"rank {arr.ndim} exceeds the format maximum of {MAX_RANK}")
    with open(path, "wb") as handle:
        handle.write(_PREFIX.pack(TENSOR_MAGIC, TENSOR_VERSION, arr.ndim))
        if arr.ndim:
            handle.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        handle.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a TNSR file into a float64 array.

    Raises
    ------
    FormatError
        On a bad magic, unsupported version, absurd rank, or a payload whose
        byte count does not match the declared dimensions.
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < _PREFIX.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, rank = _PREFIX.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {TENSOR_MAGIC!r}")
    if version != TENSOR_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {TENSOR_VERSION}")
    if rank > MAX_RANK:
        raise FormatError(f"{path}: rank {rank} exceeds the format maximum of {MAX_RANK}")
    offset = _PREFIX.size
    if len(data) < offset + 4 * rank:
        raise FormatError(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f"<{rank}I", data, offset) if rank else ()
    offset += 4 * rank
    count = 1
    for d in dims:
        count *= d
    payload = data[offset:]
    if len(payload) != 4 * count:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * count} for shape {dims}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return values.reshape(dims)
