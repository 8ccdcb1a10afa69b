/** @file TNSR codec: n-dimensional float32 arrays in a small binary format.
 *
 * Layout, all little-endian: magic "TNSR", u32 version (1), u32 rank,
 * rank x u32 dimension sizes, then prod(dims) float32 values row-major.
 * Rank 0 is a single scalar with no dimension words.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FormatError } from "./errors.js";

export const TENSOR_MAGIC = "TNSR";
export const TENSOR_VERSION = 1;
export const MAX_RANK = 8;

export interface Tensor {
  /** Dimension sizes, outermost first. Empty for a scalar. */
  readonly dims: readonly number[];
  /** Row-major payload; length is the product of dims (1 for a scalar). */
  readonly data: Float32Array;
}

function elementCount(dims: readonly number[]): number {
  let count = 1;
  for (const d of dims) count *= d;
  return count;
}

function checkDims(dims: readonly number[]): void {
  if (dims.length > MAX_RANK)
    throw new FormatError(`rank ${dims.length} exceeds the format maximum of ${MAX_RANK}`);
  for (const d of dims)
    if (!Number.isInteger(d) || d < 0)
      throw new FormatError(`dimension sizes must be non-negative integers, got ${d}`);
}

/** Build a tensor from any numeric iterable, checking the element count. */
export function tensor(dims: readonly number[], values: ArrayLike<number>): Tensor {
  checkDims(dims);
  const data = Float32Array.from(values as ArrayLike<number>);
  if (data.length !== elementCount(dims))
    throw new FormatError(
      `shape [${dims.join(", ")}] needs ${elementCount(dims)} values, got ${data.length}`,
    );
  return { dims: [...dims], data };
}

export function scalar(value: number): Tensor {
  return { dims: [], data: Float32Array.of(value) };
}

/** The single value of a rank-0 tensor. */
export function scalarValue(t: Tensor): number {
  if (t.dims.length !== 0)
    throw new FormatError(`expected a scalar tensor, got rank ${t.dims.length}`);
  return t.data[0];
}

export function encodeTensor(t: Tensor): Buffer {
  checkDims(t.dims);
  if (t.data.length !== elementCount(t.dims))
    throw new FormatError(
      `payload has ${t.data.length} values but shape [${t.dims.join(", ")}] needs ${elementCount(t.dims)}`,
    );
  const buf = Buffer.alloc(12 + 4 * t.dims.length + 4 * t.data.length);
  buf.write(TENSOR_MAGIC, 0, "ascii");
  buf.writeUInt32LE(TENSOR_VERSION, 4);
  buf.writeUInt32LE(t.dims.length, 8);
  let offset = 12;
  for (const d of t.dims) {
    buf.writeUInt32LE(d, offset);
    offset += 4;
  }
  for (let i = 0; i < t.data.length; i++) {
    buf.writeFloatLE(t.data[i], offset);
    offset += 4;
  }
  return buf;
}

export function decodeTensor(buf: Buffer, context = "tensor"): Tensor {
  if (buf.length < 12)
    throw new FormatError(`${context}: truncated header (${buf.length} bytes)`);
  const magic = buf.toString("ascii", 0, 4);
  if (magic !== TENSOR_MAGIC)
    throw new FormatError(`${context}: bad magic ${JSON.stringify(magic)}, expected "${TENSOR_MAGIC}"`);
  const version = buf.readUInt32LE(4);
  if (version !== TENSOR_VERSION)
    throw new FormatError(`${context}: unsupported version ${version}, expected ${TENSOR_VERSION}`);
  const rank = buf.readUInt32LE(8);
  if (rank > MAX_RANK)
    throw new FormatError(`${context}: rank ${rank} exceeds the format maximum of ${MAX_RANK}`);
  if (buf.length < 12 + 4 * rank)
    throw new FormatError(`${context}: truncated dimension list`);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) dims.push(buf.readUInt32LE(12 + 4 * i));
  const count = elementCount(dims);
  const payload = buf.subarray(12 + 4 * rank);
  if (payload.length !== 4 * count)
    throw new FormatError(
      `${context}: payload is ${payload.length} bytes, expected ${4 * count} for shape [${dims.join(", ")}]`,
    );
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = payload.readFloatLE(4 * i);
  return { dims, data };
}

export function readTensor(path: string): Tensor {
  return decodeTensor(readFileSync(path), path);
}

export function writeTensor(t: Tensor, path: string): void {
  writeFileSync(path, encodeTensor(t));
}
