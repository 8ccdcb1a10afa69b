"""Dense warp fields: rasterization, blending, and the TPSF file format.

A warp field stores, for every output pixel, the normalized source
coordinate to sample from (backward warping).  ``coords[r, c]`` is the
``(x, y)`` pair for output row r, column c.

TPSF is the binary interchange format for fields.  Layout, all little-endian:

    bytes 0..3   magic "TPSF"
    u32          version (1)
    u32          height
    u32          width
    then height * width * 2 float32 values, row-major, x before y.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .landmarks import LandmarkSet, _normalize_axis, normalize_points
from .tps import TpsTransform, _eval_arrays

FIELD_MAGIC = b"TPSF"
FIELD_VERSION = 1
DEFAULT_BLEND_EPSILON = 1e-4

_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True, eq=False)
class WarpField:
    """Per-pixel normalized source coordinates, shape (height, width, 2)."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coords, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"coords must have shape (height, width, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def height(self) -> int:
        return self.coords.shape[0]

    @property
    def width(self) -> int:
        return self.coords.shape[1]


def _grid_axes(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    xs = _normalize_axis(np.arange(width, dtype=np.float64), width)
    ys = _normalize_axis(np.arange(height, dtype=np.float64), height)
    return xs, ys


def identity_field(height: int, width: int) -> WarpField:
    """The field that samples every output pixel from its own location."""
    if height < 1 or width < 1:
        raise ValueError(f"field dimensions must be positive, got {height}x{width}")
    xs, ys = _grid_axes(height, width)
    coords = np.empty((height, width, 2), dtype=np.float64)
    coords[:, :, 0] = xs[None, :]
    coords[:, :, 1] = ys[:, None]
    return WarpField(coords=coords)


def _row_bands(height: int, threads: int) -> list[tuple[int, int]]:
    count = max(1, min(threads, height))
    edges = np.linspace(0, height, count + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def rasterize_group_field(
    transform: TpsTransform, height: int, width: int, threads: int = 1
) -> WarpField:
    """Evaluate a transform at every pixel center of an output grid.

    The result is bit-identical to calling the point evaluator on each
    pixel's normalized coordinates, regardless of ``threads``: worker bands
    cover disjoint row ranges and every pixel's arithmetic is independent of
    band boundaries.
    """
    if height < 1 or width < 1:
        raise ValueError(f"field dimensions must be positive, got {height}x{width}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    xs, ys = _grid_axes(height, width)
    coords = np.empty((height, width, 2), dtype=np.float64)

    def fill(row_start: int, row_stop: int) -> None:
        rows = row_stop - row_start
        px = np.tile(xs, rows)
        py = np.repeat(ys[row_start:row_stop], width)
        fx, fy = _eval_arrays(transform, px, py)
        band = coords[row_start:row_stop]
        band[:, :, 0] = fx.reshape(rows, width)
        band[:, :, 1] = fy.reshape(rows, width)

    bands = _row_bands(height, threads)
    if len(bands) == 1:
        fill(*bands[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            list(pool.map(lambda band: fill(*band), bands))
    return WarpField(coords=coords)


def blend_group_fields(
    fields, landmarks: LandmarkSet, epsilon: float = DEFAULT_BLEND_EPSILON
) -> WarpField:
    """Combine per-group fields with inverse-distance weights.

    Each pixel's blend weight for group k is proportional to
    ``1 / (d_k^2 + epsilon)`` where d_k is the normalized-space distance to
    the nearest landmark of group k in ``landmarks`` (the target-side set).
    Weights are normalized to sum to one, so the output is a convex
    combination of the inputs at every pixel.
    """
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field to blend")
    if len(fields) != len(landmarks.groups):
        raise ValueError(
            f"got {len(fields)} fields for {len(landmarks.groups)} landmark groups"
        )
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    height, width = fields[0].height, fields[0].width
    for field in fields[1:]:
        if field.height != height or field.width != width:
            raise ValueError("all fields must share the same dimensions")
    if len(fields) == 1:
        return fields[0]

    xs, ys = _grid_axes(height, width)
    gx = np.broadcast_to(xs[None, :], (height, width))
    gy = np.broadcast_to(ys[:, None], (height, width))

    accum = np.zeros((height, width, 2), dtype=np.float64)
    total = np.zeros((height, width), dtype=np.float64)
    for field, group in zip(fields, landmarks.groups):
        pts = normalize_points(group.points, landmarks.width, landmarks.height)
        nearest_sq = np.full((height, width), np.inf)
        for lx, ly in pts:
            dx = gx - lx
            dy = gy - ly
            np.minimum(nearest_sq, dx * dx + dy * dy, out=nearest_sq)
        weight = 1.0 / (nearest_sq + epsilon)
        total += weight
        accum += weight[:, :, None] * field.coords
    accum /= total[:, :, None]
    return WarpField(coords=accum)


def write_field(field: WarpField, path) -> None:
    """Write a field in the TPSF format."""
    payload = field.coords.astype("<f4").tobytes()
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, field.height, field.width))
        handle.write(payload)


def read_field(path) -> WarpField:
    """Read a TPSF file.

    Raises
    ------
    FormatError
        On a bad magic, unsupported version, or a payload whose size does
        not match the declared dimensions.
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, height, width = _HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    if version != FIELD_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {FIELD_VERSION}")
    if height < 1 or width < 1:
        raise FormatError(f"{path}: invalid dimensions {height}x{width}")
    expected = height * width * 2 * 4
    payload = data[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for a {height}x{width} field"
        )
    coords = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width, 2)
    if not np.all(np.isfinite(coords)):
        raise FormatError(f"{path}: field contains non-finite values")
    return WarpField(coords=coords)
