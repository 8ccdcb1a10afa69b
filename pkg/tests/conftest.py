"""Shared builders for randomized test inputs.

Everything takes an explicit ``numpy.random.Generator`` so each test pins
its own seed; nothing here owns global state.
"""

from __future__ import annotations

import numpy as np

from tpswarp import (
    FeatureMap,
    LandmarkGroup,
    LandmarkSet,
    TpsTransform,
    WarpField,
    grid_sample,
    solve_tps,
)


def random_transform(
    rng: np.random.Generator,
    n: int = 8,
    spread: float = 0.8,
    amplitude: float = 0.15,
    regularization: float | None = 0.0,
) -> TpsTransform:
    """Solve a transform from jittered-lattice constraints.

    Using a lattice keeps constraint points well separated, so the solve is
    well conditioned for any seed.
    """
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    xs = np.linspace(-spread, spread, cols)
    ys = np.linspace(-spread, spread, rows)
    base = np.array([(x, y) for y in ys for x in xs][:n])
    spacing = min(xs[1] - xs[0] if cols > 1 else 2 * spread, ys[1] - ys[0] if rows > 1 else 2 * spread)
    points = base + rng.uniform(-0.3 * spacing, 0.3 * spacing, base.shape)
    values = points + rng.uniform(-amplitude, amplitude, points.shape)
    return solve_tps(points, values, regularization=regularization)


def lattice_points(
    rng: np.random.Generator, count: int, width: int, height: int, margin: float, jitter: float
) -> np.ndarray:
    """Jittered lattice of pixel-space points, all inside the margin."""
    cols = int(np.ceil(np.sqrt(count)))
    rows = int(np.ceil(count / cols))
    xs = np.linspace(margin, width - 1 - margin, cols)
    ys = np.linspace(margin, height - 1 - margin, rows)
    base = np.array([(x, y) for y in ys for x in xs][:count])
    pts = base + rng.uniform(-jitter, jitter, base.shape)
    pts[:, 0] = np.clip(pts[:, 0], 0.0, width - 1.0)
    pts[:, 1] = np.clip(pts[:, 1], 0.0, height - 1.0)
    return pts


def landmark_pair(
    rng: np.random.Generator,
    width: int,
    height: int,
    group_names: tuple[str, ...] = ("face",),
    n_per_group: int = 10,
    shift: float | None = None,
) -> tuple[LandmarkSet, LandmarkSet]:
    """Two compatible landmark sets related by a smooth random displacement."""
    if shift is None:
        shift = 0.04 * min(width, height)
    margin = max(4.0, 3.0 * shift)
    jitter = 0.05 * min(width, height)
    groups_a = []
    groups_b = []
    total = len(group_names) * n_per_group
    pts = lattice_points(rng, total, width, height, margin, jitter)
    offsets = rng.uniform(-shift, shift, pts.shape)
    for k, name in enumerate(group_names):
        block = pts[k * n_per_group : (k + 1) * n_per_group]
        groups_a.append(LandmarkGroup(name=name, points=block))
        groups_b.append(LandmarkGroup(name=name, points=block + offsets[k * n_per_group : (k + 1) * n_per_group]))
    set_a = LandmarkSet(width=width, height=height, n_per_group=n_per_group, groups=tuple(groups_a))
    set_b = LandmarkSet(width=width, height=height, n_per_group=n_per_group, groups=tuple(groups_b))
    return set_a, set_b


def smooth_image(
    rng: np.random.Generator, channels: int, height: int, width: int, blobs: int = 6
) -> FeatureMap:
    """Band-limited synthetic image: a sum of broad Gaussian bumps."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    values = np.zeros((channels, height, width))
    for c in range(channels):
        plane = np.zeros((height, width))
        for _ in range(blobs):
            cx = rng.uniform(0, width)
            cy = rng.uniform(0, height)
            sigma = rng.uniform(0.12, 0.3) * min(height, width)
            amp = rng.uniform(0.3, 1.0)
            plane += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma * sigma))
        peak = plane.max()
        if peak > 0:
            plane /= peak
        values[c] = plane
    return FeatureMap(values=values)


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    mse = float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def fd_gradients(input_map, field, grad_output, border, step=1e-4):
    """Central finite differences of L = sum(grad_output * forward)."""

    def loss(values, coords):
        out = grid_sample(FeatureMap(values=values), WarpField(coords=coords), border=border)
        return float(np.sum(grad_output.values * out.values))

    base_values = input_map.values
    base_coords = field.coords
    grad_in = np.zeros_like(base_values)
    flat = base_values.ravel()
    for i in range(flat.size):
        plus = base_values.copy().ravel()
        minus = base_values.copy().ravel()
        plus[i] += step
        minus[i] -= step
        grad_in.ravel()[i] = (
            loss(plus.reshape(base_values.shape), base_coords)
            - loss(minus.reshape(base_values.shape), base_coords)
        ) / (2 * step)
    grad_field = np.zeros_like(base_coords)
    flat_c = base_coords.ravel()
    for i in range(flat_c.size):
        plus = base_coords.copy().ravel()
        minus = base_coords.copy().ravel()
        plus[i] += step
        minus[i] -= step
        grad_field.ravel()[i] = (
            loss(base_values, plus.reshape(base_coords.shape))
            - loss(base_values, minus.reshape(base_coords.shape))
        ) / (2 * step)
    return grad_in, grad_field


def knot_safe_field(rng, height, width, in_height, in_width, overshoot=1.5):
    """Random coordinates whose pixel-space fractions stay away from 0 and 1.

    Bilinear output is only piecewise differentiable; finite differences
    straddling a knot would compare garbage, so sampled fractions keep a
    margin around the integers.
    """
    x = rng.uniform(-overshoot, in_width - 1 + overshoot, (height, width))
    y = rng.uniform(-overshoot, in_height - 1 + overshoot, (height, width))
    for arr in (x, y):
        frac = arr - np.floor(arr)
        squeezed = 0.1 + 0.8 * frac
        arr += squeezed - frac
    coords = np.empty((height, width, 2))
    coords[:, :, 0] = 2.0 * (x + 0.5) / in_width - 1.0
    coords[:, :, 1] = 2.0 * (y + 0.5) / in_height - 1.0
    return WarpField(coords=coords)


def relative_error(analytic, numeric, floor=1e-6):
    analytic = np.asarray(analytic).ravel()
    numeric = np.asarray(numeric).ravel()
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float((np.abs(analytic - numeric)[mask] / scale[mask]).max())
