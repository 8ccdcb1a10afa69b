"""Bilinear resampling of feature maps through warp fields.

Forward sampling gathers, for each output pixel, the four input pixels
around the field's source coordinate and blends them bilinearly.  The
backward pass returns exact analytic gradients with respect to both the
input values and the field coordinates, matching the forward arithmetic
(linear in the input, piecewise linear in the coordinates).

Two treatments of out-of-range source coordinates exist:

``clamp``
    Taps replicate the border pixel.  Outside the image the output saturates
    and the coordinate gradient along the saturated axis is zero.
``zeros``
    Taps outside the image read as zero, so values fade to black across the
    border.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .warp_field import WarpField, _row_bands, identity_field

BORDER_MODES = ("clamp", "zeros")


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """A channels-first stack of 2-D planes, shape (channels, height, width)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(
                f"values must have shape (channels, height, width), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def _check_border(border: str) -> None:
    if border not in BORDER_MODES:
        raise ValueError(f"border must be one of {BORDER_MODES}, got {border!r}")


def _is_identity(field: WarpField) -> bool:
    """Corner probe first; the full comparison runs only when corners match."""
    h, w = field.height, field.width
    c = field.coords
    if not (
        c[0, 0, 0] == 2.0 * 0.5 / w - 1.0
        and c[0, 0, 1] == 2.0 * 0.5 / h - 1.0
        and c[h - 1, w - 1, 0] == 2.0 * (w - 0.5) / w - 1.0
        and c[h - 1, w - 1, 1] == 2.0 * (h - 0.5) / h - 1.0
    ):
        return False
    return bool(np.array_equal(c, identity_field(h, w).coords))


def _tap_data(field_band: np.ndarray, in_height: int, in_width: int, border: str):
    """Flat tap indices, bilinear weights, and fractions for one coordinate band.

    Indices are always clipped into the image; in ``zeros`` mode the weight
    of an outside tap is zeroed instead, which makes the clipped read
    harmless.  Returns (tx, ty, indices[4], weights[4], masks), every array
    flattened to 1-D; ``masks`` is None in clamp mode and a list of
    inside-the-image flags per tap in zeros mode.
    """
    x = (field_band[:, :, 0].ravel() + 1.0) * (0.5 * in_width) - 0.5
    y = (field_band[:, :, 1].ravel() + 1.0) * (0.5 * in_height) - 0.5
    x0f = np.floor(x)
    y0f = np.floor(y)
    tx = x - x0f
    ty = y - y0f
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    x1 = x0 + 1
    y1 = y0 + 1

    weights = [
        (1.0 - tx) * (1.0 - ty),
        tx * (1.0 - ty),
        (1.0 - tx) * ty,
        tx * ty,
    ]
    tap_x = (x0, x1, x0, x1)
    tap_y = (y0, y0, y1, y1)
    masks = None
    if border == "zeros":
        masks = [
            (tap_x[i] >= 0)
            & (tap_x[i] < in_width)
            & (tap_y[i] >= 0)
            & (tap_y[i] < in_height)
            for i in range(4)
        ]
        for i in range(4):
            weights[i] = weights[i] * masks[i]
    indices = [
        np.clip(tap_y[i], 0, in_height - 1) * in_width + np.clip(tap_x[i], 0, in_width - 1)
        for i in range(4)
    ]
    return tx, ty, indices, weights, masks


def grid_sample(
    input: FeatureMap, field: WarpField, border: str = "clamp", threads: int = 1
) -> FeatureMap:
    """Sample ``input`` at each output pixel's field coordinate.

    The output has the field's height and width and the input's channel
    count.  When the field equals the identity field for the input's own
    dimensions, the input comes back as an untouched copy, bit for bit.
    """
    _check_border(border)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if (
        input.height == field.height
        and input.width == field.width
        and _is_identity(field)
    ):
        return FeatureMap(values=input.values.copy())

    channels = input.channels
    out = np.empty((channels, field.height, field.width), dtype=np.float64)
    flat_in = input.values.reshape(channels, -1)

    def fill(row_start: int, row_stop: int) -> None:
        band = field.coords[row_start:row_stop]
        _, _, indices, weights, _ = _tap_data(band, input.height, input.width, border)
        rows = row_stop - row_start
        for c in range(channels):
            plane = flat_in[c]
            acc = np.take(plane, indices[0]) * weights[0]
            for i in range(1, 4):
                acc += np.take(plane, indices[i]) * weights[i]
            out[c, row_start:row_stop] = acc.reshape(rows, field.width)

    bands = _row_bands(field.height, threads)
    if len(bands) == 1:
        fill(*bands[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            list(pool.map(lambda b: fill(*b), bands))
    return FeatureMap(values=out)


def grid_sample_backward(
    grad_output: FeatureMap, input: FeatureMap, field: WarpField, border: str = "clamp"
) -> tuple[FeatureMap, np.ndarray]:
    """Analytic gradients of a sampling operation.

    Parameters
    ----------
    grad_output : FeatureMap
        Upstream gradient with the sampled output's shape.
    input, field, border
        The arguments the forward pass ran with.

    Returns
    -------
    (grad_input, grad_field)
        ``grad_input`` matches the input's shape; ``grad_field`` is a
        (height, width, 2) array of derivatives with respect to the
        normalized field coordinates.  Scatter into ``grad_input`` runs in a
        fixed order, so the result is deterministic.
    """
    _check_border(border)
    if grad_output.channels != input.channels:
        raise ValueError(
            f"grad_output has {grad_output.channels} channels, input has {input.channels}"
        )
    if grad_output.height != field.height or grad_output.width != field.width:
        raise ValueError(
            f"grad_output is {grad_output.height}x{grad_output.width}, "
            f"field is {field.height}x{field.width}"
        )

    channels = input.channels
    in_h, in_w = input.height, input.width
    tx, ty, indices, weights, masks = _tap_data(field.coords, in_h, in_w, border)

    flat_in = input.values.reshape(channels, -1)
    go = grad_output.values.reshape(channels, -1)

    grad_input = np.zeros((channels, in_h * in_w), dtype=np.float64)
    grad_x = np.zeros(field.height * field.width, dtype=np.float64)
    grad_y = np.zeros_like(grad_x)
    for c in range(channels):
        g = go[c]
        for i in range(4):
            np.add.at(grad_input[c], indices[i], weights[i] * g)
        plane = flat_in[c]
        taps = [np.take(plane, indices[i]) for i in range(4)]
        if masks is not None:
            # an outside tap contributes zero to the forward value, so its
            # effective value in the coordinate derivative is zero too
            for i in range(4):
                taps[i] = taps[i] * masks[i]
        v00, v01, v10, v11 = taps
        grad_x += g * ((1.0 - ty) * (v01 - v00) + ty * (v11 - v10))
        grad_y += g * ((1.0 - tx) * (v10 - v00) + tx * (v11 - v01))

    grad_field = np.empty((field.height, field.width, 2), dtype=np.float64)
    grad_field[:, :, 0] = (grad_x * (0.5 * in_w)).reshape(field.height, field.width)
    grad_field[:, :, 1] = (grad_y * (0.5 * in_h)).reshape(field.height, field.width)
    return FeatureMap(values=grad_input.reshape(channels, in_h, in_w)), grad_field


def warp_image(
    image: FeatureMap, field: WarpField, border: str = "clamp", threads: int = 1
) -> FeatureMap:
    """Warp an image backward through a field; alias of :func:`grid_sample`."""
    return grid_sample(image, field, border=border, threads=threads)


def upsample_field(field: WarpField, height: int, width: int) -> WarpField:
    """Resize a field by bilinearly resampling its displacement.

    The displacement (field minus identity) is interpolated onto the new
    grid and added back to the new grid's identity coordinates.  This keeps
    an identity field exactly identity at any size and avoids the border
    extrapolation artifacts that resampling raw coordinates would cause.
    """
    source_identity = identity_field(field.height, field.width)
    displacement = field.coords - source_identity.coords
    planes = FeatureMap(values=np.ascontiguousarray(displacement.transpose(2, 0, 1)))
    target_identity = identity_field(height, width)
    sampled = grid_sample(planes, target_identity, border="clamp")
    coords = target_identity.coords + sampled.values.transpose(1, 2, 0)
    return WarpField(coords=coords)
