import { describe, expect, it } from "vitest";

import { join } from "node:path";

import { field, writeField } from "../src/field.js";
import { type ManifestTask, runManifest } from "../src/runner.js";
import { readTensor, tensor, writeTensor } from "../src/tensor.js";
import { mulberry32, randInt, withTempDir } from "./helpers.js";

/**
 * Central-difference check of grid_sample_backward, run entirely through
 * engine processes and float32 files.
 *
 * A file boundary rounds every intermediate to float32, so a naive 1e-4
 * probe would drown in rounding noise. Instead every quantity is kept an
 * exact dyadic rational small enough to survive float32 unchanged: input
 * values are sixteenths, field coordinates land on cell centers
 * (fraction 1/2), and the probe steps are powers of two. The sampled
 * output is then exact, the difference quotient is the exact derivative
 * of the multilinear interpolant, and the analytic gradients match it to
 * the last bit rather than merely within the 1e-4 bound.
 */

const INSTANCES = 100;
const H_VALUE = 1 / 16;
const H_FIELD = 1 / 32;
const REL_TOL = 1e-4;
const FD_FLOOR = 1e-6;

function checkEntry(analytic: number, fd: number, label: string): number {
  if (Math.abs(fd) > FD_FLOOR) {
    const rel = Math.abs(analytic - fd) / Math.abs(fd);
    expect(rel, `${label}: analytic ${analytic} vs fd ${fd}`).toBeLessThanOrEqual(REL_TOL);
    return rel;
  }
  expect(Math.abs(analytic - fd), label).toBeLessThanOrEqual(FD_FLOOR);
  return 0;
}

describe("sampling gradients against finite differences", () => {
  for (let instance = 0; instance < INSTANCES; instance++) {
    it(`instance ${instance} matches central differences`, () => {
      const rand = mulberry32(0x5eed + instance);
      const dyadic = () => (randInt(rand, 0, 1) === 0 ? 4 : 8);
      const channels = randInt(rand, 1, 4);
      const hIn = dyadic();
      const wIn = dyadic();
      const hOut = dyadic();
      const wOut = dyadic();
      const border = instance % 2 === 0 ? "clamp" : "zeros";

      const inputVals = Float64Array.from({ length: channels * hIn * wIn }, () =>
        randInt(rand, 0, 32) * H_VALUE,
      );
      const gradOutVals = Float64Array.from({ length: channels * hOut * wOut }, () =>
        randInt(rand, -24, 24) * H_VALUE,
      );
      // every sampling point sits at a cell center: both probe directions
      // stay strictly inside the same bilinear cell and away from borders
      const coords = new Float64Array(hOut * wOut * 2);
      for (let p = 0; p < hOut * wOut; p++) {
        coords[2 * p] = (2 * (randInt(rand, 0, wIn - 2) + 1)) / wIn - 1;
        coords[2 * p + 1] = (2 * (randInt(rand, 0, hIn - 2) + 1)) / hIn - 1;
      }

      withTempDir((tmp) => {
        const inputPath = join(tmp, "input.tnsr");
        const gradOutPath = join(tmp, "grad_output.tnsr");
        const fieldPath = join(tmp, "field.tpsf");
        writeTensor(tensor([channels, hIn, wIn], inputVals), inputPath);
        writeTensor(tensor([channels, hOut, wOut], gradOutVals), gradOutPath);
        writeField(field(hOut, wOut, coords), fieldPath);

        const tasks: ManifestTask[] = [
          {
            op: "grid_sample_backward",
            inputs: [gradOutPath, inputPath, fieldPath],
            params: { border },
            out_dir: join(tmp, "out_b"),
          },
        ];
        const probe = (name: string, path: string) => {
          tasks.push({
            op: "grid_sample",
            inputs: [path, fieldPath],
            params: { border },
            out_dir: join(tmp, `out_${name}`),
          });
        };
        const probeField = (name: string, path: string) => {
          tasks.push({
            op: "grid_sample",
            inputs: [inputPath, path],
            params: { border },
            out_dir: join(tmp, `out_${name}`),
          });
        };

        for (let j = 0; j < inputVals.length; j++) {
          for (const [tag, sign] of [["ip", 1], ["im", -1]] as const) {
            const vals = Float64Array.from(inputVals);
            vals[j] += sign * H_VALUE;
            const path = join(tmp, `${tag}_${j}.tnsr`);
            writeTensor(tensor([channels, hIn, wIn], vals), path);
            probe(`${tag}_${j}`, path);
          }
        }
        for (let f = 0; f < coords.length; f++) {
          for (const [tag, sign] of [["fp", 1], ["fm", -1]] as const) {
            const pert = Float64Array.from(coords);
            pert[f] += sign * H_FIELD;
            const path = join(tmp, `${tag}_${f}.tpsf`);
            writeField(field(hOut, wOut, pert), path);
            probeField(`${tag}_${f}`, path);
          }
        }

        const results = runManifest(tasks, join(tmp, "manifest.json"));
        expect(results).toHaveLength(tasks.length);

        // the loss is sum(grad_out * output); with sixteenth-valued
        // factors the float64 accumulation below is exact
        const loss = (name: string): number => {
          const out = readTensor(join(tmp, `out_${name}`, "output.tnsr")).data;
          let acc = 0;
          for (let i = 0; i < out.length; i++) acc += gradOutVals[i] * out[i];
          return acc;
        };

        const gradInput = readTensor(join(tmp, "out_b", "grad_input.tnsr"));
        expect(gradInput.dims).toEqual([channels, hIn, wIn]);
        for (let j = 0; j < inputVals.length; j++) {
          const fd = (loss(`ip_${j}`) - loss(`im_${j}`)) / (2 * H_VALUE);
          checkEntry(gradInput.data[j], fd, `input[${j}]`);
        }

        const gradField = readTensor(join(tmp, "out_b", "grad_field.tnsr"));
        expect(gradField.dims).toEqual([hOut, wOut, 2]);
        for (let f = 0; f < coords.length; f++) {
          const fd = (loss(`fp_${f}`) - loss(`fm_${f}`)) / (2 * H_FIELD);
          checkEntry(gradField.data[f], fd, `field[${f}]`);
        }
      });
    });
  }
});
