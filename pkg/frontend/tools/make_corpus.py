"""Generate the conformance corpus for the bindings test suite.

Each case is a directory holding input files, a task description, and the
expected output files, produced by the same kernel dispatch the engine CLI
uses.  The bindings replay every task and must reproduce the expected
outputs byte for byte.  Deterministic: rebuilding the corpus from the same
engine version yields identical files.

Run from the frontend directory: python3 tools/make_corpus.py
"""

import json
import os
import shutil

import numpy as np

from tpswarp import (
    LandmarkGroup,
    LandmarkSet,
    save_landmarks,
    solve_tps,
    write_field,
    write_tensor,
)
from tpswarp.kernels import run_kernel_op
from tpswarp.warp_field import WarpField

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")

rng = np.random.default_rng(99)
cases = []


def new_case(op, inputs, params):
    """Register one case: write inputs, run the op, store expected outputs.

    ``inputs`` maps file names to writer callables taking the full path.
    """
    name = f"case_{len(cases):03d}_{op}"
    case_dir = os.path.join(CORPUS, name)
    in_dir = os.path.join(case_dir, "inputs")
    expected_dir = os.path.join(case_dir, "expected")
    os.makedirs(in_dir)
    relative = []
    for file_name, writer in inputs:
        writer(os.path.join(in_dir, file_name))
        relative.append(f"inputs/{file_name}")
    run_kernel_op(op, [os.path.join(case_dir, p) for p in relative], params, expected_dir)
    with open(os.path.join(case_dir, "task.json"), "w") as handle:
        json.dump({"op": op, "inputs": relative, "params": params}, handle, indent=2)
        handle.write("\n")
    cases.append(name)


def tensor_writer(array):
    return lambda path: write_tensor(np.asarray(array, dtype=np.float64), path)


def field_writer(coords):
    return lambda path: write_field(WarpField(coords=np.asarray(coords, dtype=np.float64)), path)


def landmark_writer(landmark_set):
    return lambda path: save_landmarks(landmark_set, path)


def spread_points(n, low=-0.9, high=0.9):
    """Random points with pairwise separation, away from solver rejection."""
    while True:
        pts = rng.uniform(low, high, (n, 2))
        deltas = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((deltas**2).sum(-1)) + np.eye(n)
        if dist.min() > 0.05:
            return pts


def random_landmarks(width, height, groups, n_per_group):
    margin = 3.0
    out = []
    for name in groups:
        pts = np.column_stack(
            [
                rng.uniform(margin, width - 1 - margin, n_per_group),
                rng.uniform(margin, height - 1 - margin, n_per_group),
            ]
        )
        out.append(LandmarkGroup(name=name, points=pts))
    return LandmarkSet(width=width, height=height, n_per_group=n_per_group, groups=tuple(out))


def shifted(landmarks, scale):
    groups = []
    for group in landmarks.groups:
        jitter = rng.uniform(-scale, scale, group.points.shape)
        pts = np.clip(group.points + jitter, 0.0, [landmarks.width - 1e-6, landmarks.height - 1e-6])
        groups.append(LandmarkGroup(name=group.name, points=pts))
    return LandmarkSet(
        width=landmarks.width,
        height=landmarks.height,
        n_per_group=landmarks.n_per_group,
        groups=tuple(groups),
    )


def smooth_field(height, width, amplitude=0.15):
    """Identity plus a low-frequency wobble, kept inside [-1.2, 1.2]."""
    ys = (2.0 * (np.arange(height) + 0.5) / height - 1.0)[:, None]
    xs = (2.0 * (np.arange(width) + 0.5) / width - 1.0)[None, :]
    phase = rng.uniform(0, 2 * np.pi, 4)
    coords = np.empty((height, width, 2))
    coords[..., 0] = xs + amplitude * np.sin(2.1 * ys + phase[0]) * np.cos(1.7 * xs + phase[1])
    coords[..., 1] = ys + amplitude * np.cos(1.9 * xs + phase[2]) * np.sin(2.3 * ys + phase[3])
    return np.clip(coords, -1.2, 1.2)


def solved(n, regularization=0.0, affine_data=False):
    pts = spread_points(n)
    if affine_data:
        matrix = rng.uniform(-1.2, 1.2, (2, 2))
        vals = pts @ matrix.T + rng.uniform(-0.4, 0.4, 2)
    else:
        vals = pts + rng.uniform(-0.25, 0.25, pts.shape)
    transform = solve_tps(pts, vals, regularization=regularization)
    return pts, vals, transform


def transform_inputs(transform):
    return [
        ("affine.tnsr", tensor_writer(transform.affine)),
        ("weights.tnsr", tensor_writer(transform.weights)),
        ("centers.tnsr", tensor_writer(transform.centers)),
    ]


if os.path.exists(CORPUS):
    shutil.rmtree(CORPUS)
os.makedirs(CORPUS)

# solve_tps: plain, larger, regularized two ways, affine data
for n, reg in ((4, None), (8, None), (12, 1e-3), (16, 0.1)):
    pts = spread_points(n)
    vals = pts + rng.uniform(-0.25, 0.25, pts.shape)
    params = {} if reg is None else {"regularization": reg}
    new_case(
        "solve_tps",
        [("points.tnsr", tensor_writer(pts)), ("values.tnsr", tensor_writer(vals))],
        params,
    )
pts = spread_points(6)
matrix = rng.uniform(-1.2, 1.2, (2, 2))
new_case(
    "solve_tps",
    [
        ("points.tnsr", tensor_writer(pts)),
        ("values.tnsr", tensor_writer(pts @ matrix.T + 0.1)),
    ],
    {},
)

# eval_tps: at random queries, at the constraints, on a grid, affine transform
for kind in ("random", "constraints", "grid", "affine"):
    pts, vals, transform = solved(rng.integers(5, 11), affine_data=kind == "affine")
    if kind == "constraints":
        queries = pts
    elif kind == "grid":
        axis = np.linspace(-1.0, 1.0, 7)
        queries = np.stack(np.meshgrid(axis, axis), axis=-1).reshape(-1, 2)
    else:
        queries = rng.uniform(-1.1, 1.1, (9, 2))
    new_case(
        "eval_tps",
        transform_inputs(transform) + [("queries.tnsr", tensor_writer(queries))],
        {},
    )

# bending_energy: generic, affine (near-zero), regularized, many centers
for n, reg, affine_data in ((6, 0.0, False), (8, 0.0, True), (10, 1e-2, False), (16, 0.0, False)):
    _, _, transform = solved(n, regularization=reg, affine_data=affine_data)
    new_case("bending_energy", transform_inputs(transform), {})

# build_warp: global, grouped, regularized, grouped with custom epsilon
lm = random_landmarks(32, 24, ("face",), 8)
new_case(
    "build_warp",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 1.5)))],
    {"height": 24, "width": 32},
)
lm = random_landmarks(32, 32, ("jaw", "brow"), 5)
new_case(
    "build_warp",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 1.0)))],
    {"height": 32, "width": 32, "mode": "grouped"},
)
lm = random_landmarks(16, 16, ("face",), 6)
new_case(
    "build_warp",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 0.8)))],
    {"height": 16, "width": 16, "regularization": 1e-2},
)
lm = random_landmarks(48, 48, ("eyes", "mouth", "nose"), 4)
new_case(
    "build_warp",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 2.0)))],
    {"height": 48, "width": 48, "mode": "grouped", "epsilon": 1e-3},
)

# multiscale_fields: single scale, three scales, four grouped scales
lm = random_landmarks(32, 32, ("face",), 7)
new_case(
    "multiscale_fields",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 1.2)))],
    {"base_height": 32, "base_width": 32, "scales": 1},
)
lm = random_landmarks(64, 64, ("face",), 9)
new_case(
    "multiscale_fields",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 2.0)))],
    {"base_height": 64, "base_width": 64, "scales": 3},
)
lm = random_landmarks(48, 32, ("jaw", "brow"), 6)
new_case(
    "multiscale_fields",
    [("from.json", landmark_writer(lm)), ("to.json", landmark_writer(shifted(lm, 1.0)))],
    {"base_height": 32, "base_width": 48, "scales": 4},
)

# grid_sample: identity, smooth clamp, overshooting zeros, shape-changing
new_case(
    "grid_sample",
    [
        ("input.tnsr", tensor_writer(rng.random((3, 8, 8)))),
        (
            "field.tpsf",
            field_writer(
                np.stack(
                    np.meshgrid(
                        2.0 * (np.arange(8) + 0.5) / 8 - 1.0,
                        2.0 * (np.arange(8) + 0.5) / 8 - 1.0,
                    ),
                    axis=-1,
                )
            ),
        ),
    ],
    {},
)
new_case(
    "grid_sample",
    [
        ("input.tnsr", tensor_writer(rng.random((2, 10, 12)))),
        ("field.tpsf", field_writer(smooth_field(9, 7))),
    ],
    {"border": "clamp"},
)
new_case(
    "grid_sample",
    [
        ("input.tnsr", tensor_writer(rng.random((1, 6, 6)))),
        ("field.tpsf", field_writer(smooth_field(6, 6, amplitude=0.5))),
    ],
    {"border": "zeros"},
)
new_case(
    "grid_sample",
    [
        ("input.tnsr", tensor_writer(rng.standard_normal((4, 5, 11)))),
        ("field.tpsf", field_writer(smooth_field(12, 4))),
    ],
    {"border": "clamp"},
)

# grid_sample_backward: the same spread of geometries, with upstream grads
for (channels, in_h, in_w), (out_h, out_w), border, amplitude in (
    ((2, 8, 8), (8, 8), "clamp", 0.12),
    ((3, 9, 6), (7, 10), "clamp", 0.2),
    ((1, 6, 6), (6, 6), "zeros", 0.5),
    ((4, 11, 5), (4, 12), "zeros", 0.25),
):
    new_case(
        "grid_sample_backward",
        [
            ("grad_output.tnsr", tensor_writer(rng.standard_normal((channels, out_h, out_w)))),
            ("input.tnsr", tensor_writer(rng.random((channels, in_h, in_w)))),
            ("field.tpsf", field_writer(smooth_field(out_h, out_w, amplitude=amplitude))),
        ],
        {"border": border},
    )

# gan_loss_discriminator: typical, saturated (clamp path), single scores
new_case(
    "gan_loss_discriminator",
    [
        ("real.tnsr", tensor_writer(rng.uniform(0.1, 0.95, 7))),
        ("fake.tnsr", tensor_writer(rng.uniform(0.05, 0.9, 5))),
    ],
    {},
)
new_case(
    "gan_loss_discriminator",
    [
        ("real.tnsr", tensor_writer(np.array([1.0, 0.999999, 0.5]))),
        ("fake.tnsr", tensor_writer(np.array([0.0, 1e-9, 0.25]))),
    ],
    {},
)
new_case(
    "gan_loss_discriminator",
    [("real.tnsr", tensor_writer(np.array([0.75]))), ("fake.tnsr", tensor_writer(np.array([0.3])))],
    {},
)

# gan_loss_generator: both modes plus the clamp path
new_case("gan_loss_generator", [("fake.tnsr", tensor_writer(rng.uniform(0.1, 0.9, 6)))], {})
new_case(
    "gan_loss_generator",
    [("fake.tnsr", tensor_writer(rng.uniform(0.1, 0.9, 8)))],
    {"mode": "non_saturating"},
)
new_case(
    "gan_loss_generator",
    [("fake.tnsr", tensor_writer(np.array([1e-9, 0.5, 1.0])))],
    {"mode": "non_saturating"},
)

# feature_matching_loss: mean, max, single channel
new_case(
    "feature_matching_loss",
    [
        ("real.tnsr", tensor_writer(rng.standard_normal((6, 9, 9)))),
        ("fake.tnsr", tensor_writer(rng.standard_normal((6, 9, 9)))),
    ],
    {},
)
new_case(
    "feature_matching_loss",
    [
        ("real.tnsr", tensor_writer(rng.standard_normal((4, 7, 11)))),
        ("fake.tnsr", tensor_writer(rng.standard_normal((4, 7, 11)))),
    ],
    {"reduce": "max"},
)
new_case(
    "feature_matching_loss",
    [
        ("real.tnsr", tensor_writer(rng.random((1, 5, 5)))),
        ("fake.tnsr", tensor_writer(rng.random((1, 5, 5)))),
    ],
    {"reduce": "mean"},
)

# spatial_correlative_maps: explicit radii and the default window
new_case(
    "spatial_correlative_maps",
    [
        ("features.tnsr", tensor_writer(rng.standard_normal((8, 12, 12)))),
        ("queries.tnsr", tensor_writer(np.array([[3.0, 4.0], [6.0, 6.0], [8.0, 3.0]]))),
    ],
    {"radius": 2},
)
new_case(
    "spatial_correlative_maps",
    [
        ("features.tnsr", tensor_writer(rng.standard_normal((2, 6, 6)))),
        ("queries.tnsr", tensor_writer(np.array([[1.0, 1.0], [2.0, 3.0], [4.0, 4.0], [3.0, 1.0]]))),
    ],
    {"radius": 1},
)
new_case(
    "spatial_correlative_maps",
    [
        ("features.tnsr", tensor_writer(rng.standard_normal((3, 16, 16)))),
        ("queries.tnsr", tensor_writer(np.array([[5.0, 7.0], [10.0, 8.0]]))),
    ],
    {},
)

# spatial_correlative_loss: explicit radius/tau combinations and defaults
def map_rows(count, side):
    return rng.uniform(-0.99, 0.99, (count, side * side))


queries5 = np.column_stack([rng.integers(2, 9, 5), rng.integers(2, 9, 5)]).astype(float)
new_case(
    "spatial_correlative_loss",
    [
        ("maps_a.tnsr", tensor_writer(map_rows(5, 5))),
        ("maps_b.tnsr", tensor_writer(map_rows(5, 5))),
        ("queries.tnsr", tensor_writer(queries5)),
    ],
    {"radius": 2},
)
queries3 = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 1.0]])
new_case(
    "spatial_correlative_loss",
    [
        ("maps_a.tnsr", tensor_writer(map_rows(3, 3))),
        ("maps_b.tnsr", tensor_writer(map_rows(3, 3))),
        ("queries.tnsr", tensor_writer(queries3)),
    ],
    {"radius": 1, "tau": 0.2},
)
queries4 = np.column_stack([rng.integers(4, 12, 4), rng.integers(4, 12, 4)]).astype(float)
new_case(
    "spatial_correlative_loss",
    [
        ("maps_a.tnsr", tensor_writer(map_rows(4, 9))),
        ("maps_b.tnsr", tensor_writer(map_rows(4, 9))),
        ("queries.tnsr", tensor_writer(queries4)),
    ],
    {},
)

# cycle_loss: unit weights, per-layer weights, fractional weights
new_case(
    "cycle_loss",
    [
        ("a0.tnsr", tensor_writer(rng.random((2, 6, 6)))),
        ("b0.tnsr", tensor_writer(rng.random((2, 6, 6)))),
    ],
    {},
)
layers = [rng.standard_normal((3, 4, 4)) for _ in range(6)]
new_case(
    "cycle_loss",
    [(f"{side}{i}.tnsr", tensor_writer(layers[k]))
     for k, (side, i) in enumerate((s, i) for s in "ab" for i in range(3))],
    {"weights": [0.5, 2.0, 1.0]},
)
new_case(
    "cycle_loss",
    [
        ("a0.tnsr", tensor_writer(rng.random((1, 3, 8)))),
        ("a1.tnsr", tensor_writer(rng.random((2, 5, 5)))),
        ("b0.tnsr", tensor_writer(rng.random((1, 3, 8)))),
        ("b1.tnsr", tensor_writer(rng.random((2, 5, 5)))),
    ],
    {"weights": [0.25, 4.0]},
)

# total_loss: default weights, custom weights, zero terms
new_case("total_loss", [], {"gan": 1.0, "feature": 1.0, "correlative": 1.0, "cycle": 1.0})
new_case(
    "total_loss",
    [],
    {
        "gan": 0.7,
        "feature": 1.3,
        "correlative": 0.25,
        "cycle": 0.05,
        "lambda_feature": 2.0,
        "lambda_correlative": 0.5,
        "lambda_cycle": 20.0,
    },
)
new_case("total_loss", [], {"gan": 0.0, "feature": 0.0, "correlative": 0.0, "cycle": 0.0})

# embedding_cosine_distance: random pairs, identical, antipodal
emb = rng.standard_normal((6, 16))
new_case(
    "embedding_cosine_distance",
    [
        ("a.tnsr", tensor_writer(emb)),
        ("b.tnsr", tensor_writer(rng.standard_normal((6, 16)))),
    ],
    {},
)
new_case(
    "embedding_cosine_distance",
    [("a.tnsr", tensor_writer(emb)), ("b.tnsr", tensor_writer(emb))],
    {},
)
new_case(
    "embedding_cosine_distance",
    [("a.tnsr", tensor_writer(emb)), ("b.tnsr", tensor_writer(-emb))],
    {},
)

with open(os.path.join(CORPUS, "index.json"), "w") as handle:
    json.dump({"cases": cases}, handle, indent=2)
    handle.write("\n")

ops = sorted({name.split("_", 2)[2] for name in cases})
print(f"{len(cases)} cases covering {len(ops)} ops: {', '.join(ops)}")
