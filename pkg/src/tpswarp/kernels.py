"""File-based kernel dispatch: run one named operation on serialized arrays.

This is the surface external callers script against.  Inputs arrive as TNSR
tensors, TPSF fields, or landmark JSON (dispatched on file extension);
outputs land in a caller-chosen directory in the same formats, float32 on
disk.  A manifest file can batch many operations into one process, which
keeps per-call overhead off the table for callers driving sweeps.

Every operation delegates to the library function of the same name, so a
result produced here is the result the library produces.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import losses, pipeline, sampler, tps
from .errors import FormatError
from .landmarks import LandmarkSet, load_landmarks
from .sampler import FeatureMap
from .tensorio import read_tensor, write_tensor
from .warp_field import WarpField, read_field, write_field


def _load_input(path):
    lower = str(path).lower()
    if lower.endswith(".json"):
        return load_landmarks(path)
    if lower.endswith(".tpsf"):
        return read_field(path)
    if lower.endswith(".tnsr"):
        return read_tensor(path)
    raise FormatError(f"{path}: unrecognized input extension (expected .tnsr, .tpsf, or .json)")


def _want(values, count: int, op: str, kinds) -> None:
    if len(values) != count:
        raise ValueError(f"{op} takes {count} inputs, got {len(values)}")
    for index, (value, kind) in enumerate(zip(values, kinds)):
        if not isinstance(value, kind):
            raise ValueError(
                f"{op} input {index} must be a {kind.__name__}, got {type(value).__name__}"
            )


_REQUIRED = object()


def _param_float(params: dict, key: str, default=_REQUIRED) -> float:
    if key not in params:
        if default is _REQUIRED:
            raise ValueError(f"missing required parameter '{key}'")
        return default
    value = float(params[key])
    if not math.isfinite(value):
        raise ValueError(f"parameter '{key}' must be finite")
    return value


def _param_int(params: dict, key: str, default=_REQUIRED) -> int:
    if key not in params:
        if default is _REQUIRED:
            raise ValueError(f"missing required parameter '{key}'")
        return default
    value = float(params[key])
    if value != int(value):
        raise ValueError(f"parameter '{key}' must be an integer")
    return int(value)


def _param_str(params: dict, key: str, default=_REQUIRED) -> str:
    if key not in params:
        if default is _REQUIRED:
            raise ValueError(f"missing required parameter '{key}'")
        return default
    return str(params[key])


def _transform_from(values, op: str) -> tps.TpsTransform:
    affine, weights, centers = values
    for name, arr in (("affine", affine), ("weights", weights), ("centers", centers)):
        if not isinstance(arr, np.ndarray):
            raise ValueError(f"{op}: {name} must be a tensor input")
    return tps.TpsTransform(
        affine=affine, weights=weights, centers=centers, regularization=0.0
    )


def _feature_map(arr, op: str, name: str) -> FeatureMap:
    if not isinstance(arr, np.ndarray) or arr.ndim != 3:
        raise ValueError(f"{op}: {name} must be a rank-3 tensor")
    return FeatureMap(values=arr)


def _query_list(arr, op: str):
    if not isinstance(arr, np.ndarray) or arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{op}: queries must be a (Q, 2) tensor of (row, col) pairs")
    return tuple((int(round(r)), int(round(c))) for r, c in arr)


def _op_solve_tps(values, params, out_dir):
    _want(values, 2, "solve_tps", (np.ndarray, np.ndarray))
    reg = params.get("regularization")
    transform = tps.solve_tps(
        values[0], values[1], regularization=None if reg is None else float(reg)
    )
    paths = {
        "affine.tnsr": transform.affine,
        "weights.tnsr": transform.weights,
        "centers.tnsr": transform.centers,
    }
    out = []
    for name, arr in paths.items():
        path = os.path.join(out_dir, name)
        write_tensor(arr, path)
        out.append(path)
    return out


def _op_eval_tps(values, params, out_dir):
    _want(values, 4, "eval_tps", (np.ndarray,) * 4)
    transform = _transform_from(values[:3], "eval_tps")
    result = tps.eval_tps(transform, values[3])
    path = os.path.join(out_dir, "points.tnsr")
    write_tensor(result, path)
    return [path]


def _op_bending_energy(values, params, out_dir):
    _want(values, 3, "bending_energy", (np.ndarray,) * 3)
    transform = _transform_from(values, "bending_energy")
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(tps.bending_energy(transform), path)
    return [path]


def _op_build_warp(values, params, out_dir):
    _want(values, 2, "build_warp", (LandmarkSet, LandmarkSet))
    reg = params.get("regularization")
    field = pipeline.build_warp(
        values[0],
        values[1],
        _param_int(params, "height"),
        _param_int(params, "width"),
        mode=_param_str(params, "mode", "global"),
        regularization=None if reg is None else float(reg),
        epsilon=_param_float(params, "epsilon", 1e-4),
    )
    path = os.path.join(out_dir, "field.tpsf")
    write_field(field, path)
    return [path]


def _op_multiscale_fields(values, params, out_dir):
    _want(values, 2, "multiscale_fields", (LandmarkSet, LandmarkSet))
    reg = params.get("regularization")
    fields = pipeline.multiscale_fields(
        values[0],
        values[1],
        _param_int(params, "base_height"),
        _param_int(params, "base_width"),
        scales=_param_int(params, "scales", 4),
        mode=_param_str(params, "mode", "global"),
        regularization=None if reg is None else float(reg),
    )
    out = []
    for level, field in enumerate(fields):
        path = os.path.join(out_dir, f"scale{level}.tpsf")
        write_field(field, path)
        out.append(path)
    return out


def _op_grid_sample(values, params, out_dir):
    _want(values, 2, "grid_sample", (np.ndarray, WarpField))
    result = sampler.grid_sample(
        _feature_map(values[0], "grid_sample", "input"),
        values[1],
        border=_param_str(params, "border", "clamp"),
    )
    path = os.path.join(out_dir, "output.tnsr")
    write_tensor(result.values, path)
    return [path]


def _op_grid_sample_backward(values, params, out_dir):
    _want(values, 3, "grid_sample_backward", (np.ndarray, np.ndarray, WarpField))
    grad_input, grad_field = sampler.grid_sample_backward(
        _feature_map(values[0], "grid_sample_backward", "grad_output"),
        _feature_map(values[1], "grid_sample_backward", "input"),
        values[2],
        border=_param_str(params, "border", "clamp"),
    )
    path_input = os.path.join(out_dir, "grad_input.tnsr")
    path_field = os.path.join(out_dir, "grad_field.tnsr")
    write_tensor(grad_input.values, path_input)
    write_tensor(grad_field, path_field)
    return [path_input, path_field]


def _op_gan_loss_discriminator(values, params, out_dir):
    _want(values, 2, "gan_loss_discriminator", (np.ndarray, np.ndarray))
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(losses.gan_loss_discriminator(values[0], values[1]), path)
    return [path]


def _op_gan_loss_generator(values, params, out_dir):
    _want(values, 1, "gan_loss_generator", (np.ndarray,))
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(
        losses.gan_loss_generator(values[0], mode=_param_str(params, "mode", "minimax")), path
    )
    return [path]


def _op_feature_matching_loss(values, params, out_dir):
    _want(values, 2, "feature_matching_loss", (np.ndarray, np.ndarray))
    value = losses.feature_matching_loss(
        _feature_map(values[0], "feature_matching_loss", "real"),
        _feature_map(values[1], "feature_matching_loss", "fake"),
        reduce=_param_str(params, "reduce", "mean"),
    )
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(value, path)
    return [path]


def _op_spatial_correlative_maps(values, params, out_dir):
    _want(values, 2, "spatial_correlative_maps", (np.ndarray, np.ndarray))
    maps = losses.spatial_correlative_maps(
        _feature_map(values[0], "spatial_correlative_maps", "features"),
        _query_list(values[1], "spatial_correlative_maps"),
        window_radius=_param_int(params, "radius", losses.DEFAULT_WINDOW_RADIUS),
    )
    path = os.path.join(out_dir, "maps.tnsr")
    write_tensor(maps.maps, path)
    return [path]


def _op_spatial_correlative_loss(values, params, out_dir):
    _want(values, 3, "spatial_correlative_loss", (np.ndarray,) * 3)
    queries = _query_list(values[2], "spatial_correlative_loss")
    radius = _param_int(params, "radius", losses.DEFAULT_WINDOW_RADIUS)
    set_a = losses.SimilarityMapSet(
        query_locations=queries, maps=values[0], window_radius=radius
    )
    set_b = losses.SimilarityMapSet(
        query_locations=queries, maps=values[1], window_radius=radius
    )
    value = losses.spatial_correlative_loss(
        set_a, set_b, tau=_param_float(params, "tau", losses.DEFAULT_TAU)
    )
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(value, path)
    return [path]


def _op_cycle_loss(values, params, out_dir):
    if len(values) < 2 or len(values) % 2:
        raise ValueError(
            f"cycle_loss takes an even number of tensors (layers a then layers b), got {len(values)}"
        )
    half = len(values) // 2
    layers_a = [_feature_map(v, "cycle_loss", f"a[{i}]") for i, v in enumerate(values[:half])]
    layers_b = [_feature_map(v, "cycle_loss", f"b[{i}]") for i, v in enumerate(values[half:])]
    weights = params.get("weights")
    if isinstance(weights, str):
        weights = [float(w) for w in weights.split(",") if w != ""]
    value = losses.cycle_loss(layers_a, layers_b, layer_weights=weights)
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(value, path)
    return [path]


def _op_total_loss(values, params, out_dir):
    _want(values, 0, "total_loss", ())
    weights = losses.LossWeights(
        lambda_feature=_param_float(params, "lambda_feature", 1.0),
        lambda_correlative=_param_float(params, "lambda_correlative", 1.0),
        lambda_cycle=_param_float(params, "lambda_cycle", 10.0),
    )
    value = losses.total_loss(
        _param_float(params, "gan"),
        _param_float(params, "feature"),
        _param_float(params, "correlative"),
        _param_float(params, "cycle"),
        weights=weights,
    )
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(value, path)
    return [path]


def _op_embedding_cosine_distance(values, params, out_dir):
    _want(values, 2, "embedding_cosine_distance", (np.ndarray, np.ndarray))
    path = os.path.join(out_dir, "value.tnsr")
    write_tensor(losses.embedding_cosine_distance(values[0], values[1]), path)
    return [path]


KERNEL_OPS = {
    "solve_tps": _op_solve_tps,
    "eval_tps": _op_eval_tps,
    "bending_energy": _op_bending_energy,
    "build_warp": _op_build_warp,
    "multiscale_fields": _op_multiscale_fields,
    "grid_sample": _op_grid_sample,
    "grid_sample_backward": _op_grid_sample_backward,
    "gan_loss_discriminator": _op_gan_loss_discriminator,
    "gan_loss_generator": _op_gan_loss_generator,
    "feature_matching_loss": _op_feature_matching_loss,
    "spatial_correlative_maps": _op_spatial_correlative_maps,
    "spatial_correlative_loss": _op_spatial_correlative_loss,
    "cycle_loss": _op_cycle_loss,
    "total_loss": _op_total_loss,
    "embedding_cosine_distance": _op_embedding_cosine_distance,
}


def run_kernel_op(op: str, input_paths, params: dict, out_dir) -> dict:
    """Execute one named operation and return its result manifest."""
    if op not in KERNEL_OPS:
        raise ValueError(f"unknown kernel op '{op}' (known: {', '.join(sorted(KERNEL_OPS))})")
    os.makedirs(out_dir, exist_ok=True)
    values = [_load_input(path) for path in input_paths]
    outputs = KERNEL_OPS[op](values, dict(params), out_dir)
    return {"op": op, "outputs": outputs}


def run_manifest(manifest_path) -> dict:
    """Execute every task in a batch manifest, in order.

    The manifest is JSON: ``{"tasks": [{"op": ..., "inputs": [...],
    "params": {...}, "out_dir": ...}, ...]}``.  Relative input and output
    paths are resolved against the manifest's directory.
    """
    with open(manifest_path, "rb") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("tasks"), list):
        raise FormatError(f"{manifest_path}: expected an object with a 'tasks' list")
    base = os.path.dirname(os.path.abspath(manifest_path))

    def resolve(path):
        return path if os.path.isabs(path) else os.path.join(base, path)

    results = []
    for index, task in enumerate(doc["tasks"]):
        if not isinstance(task, dict):
            raise FormatError(f"{manifest_path}: tasks[{index}] must be an object")
        for key in ("op", "inputs", "out_dir"):
            if key not in task:
                raise FormatError(f"{manifest_path}: tasks[{index}] is missing '{key}'")
        results.append(
            run_kernel_op(
                task["op"],
                [resolve(p) for p in task["inputs"]],
                task.get("params", {}),
                resolve(task["out_dir"]),
            )
        )
    return {"results": results}
