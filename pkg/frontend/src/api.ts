/** @file The bound surface: solve, warp, sample, and every loss kernel.
 *
 * Each function serializes its arguments into a scratch directory, runs
 * the corresponding engine operation, and deserializes the results, so a
 * value returned here is numerically the value the engine computed.
 * Arrays cross the boundary as contiguous row-major float32; scalars come
 * back as the float32 the engine wrote.
 */

import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Field, readField, writeField } from "./field.js";
import { LandmarkSet, writeLandmarks } from "./landmarks.js";
import { ParamValue, runKernelOp } from "./runner.js";
import { Tensor, readTensor, scalarValue, writeTensor } from "./tensor.js";

export interface TpsSolution {
  /** Affine part, rows (a0, ax, ay) per output dimension. */
  affine: Tensor;
  /** Radial weights, one row per center. */
  weights: Tensor;
  /** Constraint points the weights attach to. */
  centers: Tensor;
}

export interface SampleGradients {
  gradInput: Tensor;
  gradField: Tensor;
}

function inScratch<T>(work: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "tpswarp-"));
  try {
    return work(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function dropMissing(params: Record<string, ParamValue | undefined>): Record<string, ParamValue> {
  const out: Record<string, ParamValue> = {};
  for (const [key, value] of Object.entries(params)) if (value !== undefined) out[key] = value;
  return out;
}

/** Fit an interpolating spline mapping points to values. */
export function solveTps(points: Tensor, values: Tensor, regularization?: number): TpsSolution {
  return inScratch((dir) => {
    writeTensor(points, join(dir, "points.tnsr"));
    writeTensor(values, join(dir, "values.tnsr"));
    runKernelOp(
      "solve_tps",
      [join(dir, "points.tnsr"), join(dir, "values.tnsr")],
      dropMissing({ regularization }),
      join(dir, "out"),
    );
    return {
      affine: readTensor(join(dir, "out", "affine.tnsr")),
      weights: readTensor(join(dir, "out", "weights.tnsr")),
      centers: readTensor(join(dir, "out", "centers.tnsr")),
    };
  });
}

/** Evaluate a solved spline at query points. */
export function evalTps(solution: TpsSolution, queries: Tensor): Tensor {
  return inScratch((dir) => {
    writeTensor(solution.affine, join(dir, "affine.tnsr"));
    writeTensor(solution.weights, join(dir, "weights.tnsr"));
    writeTensor(solution.centers, join(dir, "centers.tnsr"));
    writeTensor(queries, join(dir, "queries.tnsr"));
    runKernelOp(
      "eval_tps",
      ["affine.tnsr", "weights.tnsr", "centers.tnsr", "queries.tnsr"].map((f) => join(dir, f)),
      {},
      join(dir, "out"),
    );
    return readTensor(join(dir, "out", "points.tnsr"));
  });
}

/** Integral of squared second derivatives of a solved spline. */
export function bendingEnergy(solution: TpsSolution): number {
  return inScratch((dir) => {
    writeTensor(solution.affine, join(dir, "affine.tnsr"));
    writeTensor(solution.weights, join(dir, "weights.tnsr"));
    writeTensor(solution.centers, join(dir, "centers.tnsr"));
    runKernelOp(
      "bending_energy",
      ["affine.tnsr", "weights.tnsr", "centers.tnsr"].map((f) => join(dir, f)),
      {},
      join(dir, "out"),
    );
    return scalarValue(readTensor(join(dir, "out", "value.tnsr")));
  });
}

export interface WarpOptions {
  mode?: "global" | "grouped";
  regularization?: number;
  epsilon?: number;
}

/** Dense backward-warp field moving `from` landmarks onto `to` landmarks. */
export function buildWarp(
  from: LandmarkSet,
  to: LandmarkSet,
  height: number,
  width: number,
  options: WarpOptions = {},
): Field {
  return inScratch((dir) => {
    writeLandmarks(from, join(dir, "from.json"));
    writeLandmarks(to, join(dir, "to.json"));
    runKernelOp(
      "build_warp",
      [join(dir, "from.json"), join(dir, "to.json")],
      dropMissing({ height, width, ...options }),
      join(dir, "out"),
    );
    return readField(join(dir, "out", "field.tpsf"));
  });
}

export interface MultiscaleOptions {
  scales?: number;
  mode?: "global" | "grouped";
  regularization?: number;
}

/** The warp rebuilt at halved resolutions, finest first. */
export function multiscaleFields(
  from: LandmarkSet,
  to: LandmarkSet,
  baseHeight: number,
  baseWidth: number,
  options: MultiscaleOptions = {},
): Field[] {
  return inScratch((dir) => {
    writeLandmarks(from, join(dir, "from.json"));
    writeLandmarks(to, join(dir, "to.json"));
    const result = runKernelOp(
      "multiscale_fields",
      [join(dir, "from.json"), join(dir, "to.json")],
      dropMissing({ base_height: baseHeight, base_width: baseWidth, ...options }),
      join(dir, "out"),
    );
    return result.outputs.map((path) => readField(path));
  });
}

export type BorderMode = "clamp" | "zeros";

/** Bilinear resampling of a (C, H, W) tensor through a field. */
export function gridSample(input: Tensor, field: Field, border: BorderMode = "clamp"): Tensor {
  return inScratch((dir) => {
    writeTensor(input, join(dir, "input.tnsr"));
    writeField(field, join(dir, "field.tpsf"));
    runKernelOp(
      "grid_sample",
      [join(dir, "input.tnsr"), join(dir, "field.tpsf")],
      { border },
      join(dir, "out"),
    );
    return readTensor(join(dir, "out", "output.tnsr"));
  });
}

/** Gradients of a grid_sample call wrt its input and its field. */
export function gridSampleBackward(
  gradOutput: Tensor,
  input: Tensor,
  field: Field,
  border: BorderMode = "clamp",
): SampleGradients {
  return inScratch((dir) => {
    writeTensor(gradOutput, join(dir, "grad_output.tnsr"));
    writeTensor(input, join(dir, "input.tnsr"));
    writeField(field, join(dir, "field.tpsf"));
    runKernelOp(
      "grid_sample_backward",
      [join(dir, "grad_output.tnsr"), join(dir, "input.tnsr"), join(dir, "field.tpsf")],
      { border },
      join(dir, "out"),
    );
    return {
      gradInput: readTensor(join(dir, "out", "grad_input.tnsr")),
      gradField: readTensor(join(dir, "out", "grad_field.tnsr")),
    };
  });
}

function scalarOp(
  op: string,
  tensors: [string, Tensor][],
  params: Record<string, ParamValue>,
): number {
  return inScratch((dir) => {
    const paths = tensors.map(([name, t]) => {
      const path = join(dir, name);
      writeTensor(t, path);
      return path;
    });
    runKernelOp(op, paths, params, join(dir, "out"));
    return scalarValue(readTensor(join(dir, "out", "value.tnsr")));
  });
}

export function ganLossDiscriminator(realScores: Tensor, fakeScores: Tensor): number {
  return scalarOp("gan_loss_discriminator", [["real.tnsr", realScores], ["fake.tnsr", fakeScores]], {});
}

export function ganLossGenerator(
  fakeScores: Tensor,
  mode: "minimax" | "non_saturating" = "minimax",
): number {
  return scalarOp("gan_loss_generator", [["fake.tnsr", fakeScores]], { mode });
}

export function featureMatchingLoss(
  real: Tensor,
  fake: Tensor,
  reduce: "mean" | "max" = "mean",
): number {
  return scalarOp("feature_matching_loss", [["real.tnsr", real], ["fake.tnsr", fake]], { reduce });
}

/** Cosine-similarity windows around query locations of a feature stack. */
export function spatialCorrelativeMaps(features: Tensor, queries: Tensor, radius?: number): Tensor {
  return inScratch((dir) => {
    writeTensor(features, join(dir, "features.tnsr"));
    writeTensor(queries, join(dir, "queries.tnsr"));
    runKernelOp(
      "spatial_correlative_maps",
      [join(dir, "features.tnsr"), join(dir, "queries.tnsr")],
      dropMissing({ radius }),
      join(dir, "out"),
    );
    return readTensor(join(dir, "out", "maps.tnsr"));
  });
}

export interface CorrelativeOptions {
  radius?: number;
  tau?: number;
}

export function spatialCorrelativeLoss(
  mapsA: Tensor,
  mapsB: Tensor,
  queries: Tensor,
  options: CorrelativeOptions = {},
): number {
  return scalarOp(
    "spatial_correlative_loss",
    [["maps_a.tnsr", mapsA], ["maps_b.tnsr", mapsB], ["queries.tnsr", queries]],
    dropMissing({ ...options }),
  );
}

export function cycleLoss(layersA: Tensor[], layersB: Tensor[], weights?: number[]): number {
  if (layersA.length !== layersB.length)
    throw new RangeError(`layer counts differ: ${layersA.length} vs ${layersB.length}`);
  const tensors: [string, Tensor][] = [
    ...layersA.map((t, i) => [`a${i}.tnsr`, t] as [string, Tensor]),
    ...layersB.map((t, i) => [`b${i}.tnsr`, t] as [string, Tensor]),
  ];
  return scalarOp("cycle_loss", tensors, dropMissing({ weights }));
}

export interface TotalLossWeights {
  lambdaFeature?: number;
  lambdaCorrelative?: number;
  lambdaCycle?: number;
}

export function totalLoss(
  gan: number,
  feature: number,
  correlative: number,
  cycle: number,
  weights: TotalLossWeights = {},
): number {
  return scalarOp(
    "total_loss",
    [],
    dropMissing({
      gan,
      feature,
      correlative,
      cycle,
      lambda_feature: weights.lambdaFeature,
      lambda_correlative: weights.lambdaCorrelative,
      lambda_cycle: weights.lambdaCycle,
    }),
  );
}

export function embeddingCosineDistance(a: Tensor, b: Tensor): number {
  return scalarOp("embedding_cosine_distance", [["a.tnsr", a], ["b.tnsr", b]], {});
}
