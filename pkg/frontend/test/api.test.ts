import { describe, expect, it } from "vitest";

import {
  bendingEnergy,
  buildWarp,
  cycleLoss,
  embeddingCosineDistance,
  evalTps,
  featureMatchingLoss,
  ganLossDiscriminator,
  ganLossGenerator,
  gridSample,
  gridSampleBackward,
  multiscaleFields,
  solveTps,
  spatialCorrelativeLoss,
  spatialCorrelativeMaps,
  totalLoss,
} from "../src/api.js";
import { identityField } from "../src/field.js";
import { type LandmarkSet } from "../src/landmarks.js";
import { tensor } from "../src/tensor.js";
import { mulberry32 } from "./helpers.js";

const anchors: LandmarkSet = {
  width: 16,
  height: 16,
  nPerGroup: 4,
  groups: [{ name: "anchors", points: [[2, 2], [12, 3], [3, 12], [13, 13]] }],
};

describe("spline fitting", () => {
  it("interpolates its constraints and reports near-zero energy for affine data", () => {
    const pts = [
      [0.1, 0.2],
      [0.9, 0.15],
      [0.5, 0.85],
      [0.2, 0.7],
      [0.75, 0.55],
    ];
    // values are an affine image of the points, so the radial part is noise
    const vals = pts.map(([x, y]) => [2 * x - 0.5 * y + 0.25, 0.5 * x + y - 0.1]);
    const points = tensor([5, 2], pts.flat());
    const values = tensor([5, 2], vals.flat());
    const solution = solveTps(points, values);
    expect(solution.affine.dims).toEqual([2, 3]);
    expect(solution.weights.dims).toEqual([5, 2]);
    expect(solution.centers.dims).toEqual([5, 2]);
    const back = evalTps(solution, points);
    for (let i = 0; i < back.data.length; i++)
      expect(Math.abs(back.data[i] - values.data[i])).toBeLessThan(1e-4);
    expect(Math.abs(bendingEnergy(solution))).toBeLessThan(1e-6);
  });

  it("accepts a regularization weight", () => {
    const points = tensor([4, 2], [0.1, 0.1, 0.9, 0.2, 0.3, 0.8, 0.8, 0.9]);
    const values = tensor([4, 2], [0.2, 0.1, 0.8, 0.3, 0.35, 0.7, 0.75, 0.85]);
    const energy = bendingEnergy(solveTps(points, values, 1e-3));
    expect(Number.isFinite(energy)).toBe(true);
    expect(energy).toBeGreaterThanOrEqual(0);
  });
});

describe("warp fields", () => {
  it("maps a landmark set onto itself as the exact identity at dyadic sizes", () => {
    const warpField = buildWarp(anchors, anchors, 8, 8);
    expect(warpField.coords).toEqual(identityField(8, 8).coords);

    const rand = mulberry32(7);
    const input = tensor([2, 8, 8], Float32Array.from({ length: 128 }, () => rand() * 2 - 1));
    const out = gridSample(input, warpField);
    expect(out.dims).toEqual([2, 8, 8]);
    expect(out.data).toEqual(input.data);
  });

  it("returns matching gradient shapes, identity routing gradients one to one", () => {
    const rand = mulberry32(11);
    const input = tensor([1, 4, 4], Float32Array.from({ length: 16 }, () => rand()));
    const gradOut = tensor([1, 4, 4], Float32Array.from({ length: 16 }, () => rand() - 0.5));
    const grads = gridSampleBackward(gradOut, input, identityField(4, 4), "zeros");
    expect(grads.gradInput.dims).toEqual([1, 4, 4]);
    expect(grads.gradField.dims).toEqual([4, 4, 2]);
    expect(grads.gradInput.data).toEqual(gradOut.data);
  });

  it("builds halved-resolution fields, finest first", () => {
    const shifted: LandmarkSet = {
      ...anchors,
      groups: [{ name: "anchors", points: [[3, 2.5], [11, 3.5], [3.5, 11], [12, 12.5]] }],
    };
    const fields = multiscaleFields(anchors, shifted, 16, 16, { scales: 3 });
    expect(fields.map((f) => [f.height, f.width])).toEqual([
      [16, 16],
      [8, 8],
      [4, 4],
    ]);
  });
});

describe("loss kernels", () => {
  it("scores a discriminator against its labels", () => {
    const v = ganLossDiscriminator(tensor([1], [0.8]), tensor([1], [0.3]));
    const expected = -(Math.log(Math.fround(0.8)) + Math.log(1 - Math.fround(0.3)));
    expect(Math.abs(v - expected)).toBeLessThan(1e-6);
  });

  it("evaluates both generator modes", () => {
    expect(Math.abs(ganLossGenerator(tensor([1], [0.5])) + Math.LN2)).toBeLessThan(1e-6);
    expect(
      Math.abs(ganLossGenerator(tensor([1], [0.5]), "non_saturating") - Math.LN2),
    ).toBeLessThan(1e-6);
  });

  it("compares per-channel statistics", () => {
    const real = tensor([1, 2, 2], [1, 2, 3, 4]);
    expect(featureMatchingLoss(real, real)).toBe(0);
    const fake = tensor([1, 2, 2], [0, 0, 0, 2]);
    expect(featureMatchingLoss(real, fake, "max")).toBe(2);
  });

  it("produces all-ones similarity windows for constant features", () => {
    const features = tensor([1, 5, 5], new Array(25).fill(1));
    const maps = spatialCorrelativeMaps(features, tensor([1, 2], [2, 2]), 1);
    expect(maps.dims).toEqual([1, 9]);
    for (const v of maps.data) expect(v).toBe(1);
  });

  it("matches the closed form for orthonormal one-hot maps", () => {
    const eye = new Array(27).fill(0);
    eye[0] = eye[9 + 1] = eye[18 + 2] = 1;
    const maps = tensor([3, 9], eye);
    const queries = tensor([3, 2], [1, 1, 1, 2, 2, 1]);
    const v = spatialCorrelativeLoss(maps, maps, queries, { radius: 1, tau: 0.07 });
    const expected = Math.log1p(2 * Math.exp(-1 / 0.07));
    expect(Math.abs(v - expected)).toBeLessThan(1e-9);
  });

  it("weights layerwise absolute differences", () => {
    const zero = tensor([1, 1, 1], [0]);
    const one = tensor([1, 1, 1], [1]);
    const two = tensor([1, 1, 1], [2]);
    expect(cycleLoss([zero], [one])).toBe(1);
    expect(cycleLoss([zero, two], [one, zero], [0.25, 4])).toBe(8.25);
    expect(() => cycleLoss([zero], [one, two])).toThrow(RangeError);
  });

  it("blends the four terms", () => {
    expect(totalLoss(1, 1, 1, 1)).toBe(13);
    expect(
      totalLoss(1, 2, 3, 0.5, { lambdaFeature: 0, lambdaCorrelative: 2, lambdaCycle: 4 }),
    ).toBe(9);
  });

  it("hits the cosine-distance poles exactly", () => {
    const a = tensor([1, 2], [1, 2]);
    expect(embeddingCosineDistance(a, a)).toBe(0);
    expect(embeddingCosineDistance(tensor([1, 2], [1, 0]), tensor([1, 2], [0, 1]))).toBe(1);
    expect(embeddingCosineDistance(a, tensor([1, 2], [-1, -2]))).toBe(2);
    const rows = tensor([2, 2], [1, 0, 0, 3]);
    const flipped = tensor([2, 2], [1, 0, 0, -3]);
    expect(embeddingCosineDistance(rows, flipped)).toBe(1);
  });
});
