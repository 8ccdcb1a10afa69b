/** @file TPSF codec: dense backward-warp fields.
 *
 * Little-endian layout: magic "TPSF", u32 version (1), u32 height,
 * u32 width, then height x width (x, y) float32 pairs row-major. The
 * coordinates are normalized source sampling positions: both axes span
 * [-1, 1] with the pixel-i center at 2 * (i + 0.5) / size - 1.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FormatError } from "./errors.js";

export const FIELD_MAGIC = "TPSF";
export const FIELD_VERSION = 1;

export interface Field {
  readonly height: number;
  readonly width: number;
  /** Interleaved (x, y) pairs, row-major; length is height * width * 2. */
  readonly coords: Float32Array;
}

export function field(height: number, width: number, coords: ArrayLike<number>): Field {
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1)
    throw new FormatError(`invalid dimensions ${height}x${width}`);
  const data = Float32Array.from(coords);
  if (data.length !== height * width * 2)
    throw new FormatError(
      `a ${height}x${width} field needs ${height * width * 2} coordinates, got ${data.length}`,
    );
  for (const v of data)
    if (!Number.isFinite(v)) throw new FormatError("field contains non-finite values");
  return { height, width, coords: data };
}

/** The field that samples every pixel from itself. */
export function identityField(height: number, width: number): Field {
  const coords = new Float32Array(height * width * 2);
  let k = 0;
  for (let r = 0; r < height; r++) {
    const y = (2 * (r + 0.5)) / height - 1;
    for (let c = 0; c < width; c++) {
      coords[k++] = (2 * (c + 0.5)) / width - 1;
      coords[k++] = y;
    }
  }
  return { height, width, coords };
}

export function encodeField(f: Field): Buffer {
  const buf = Buffer.alloc(16 + 4 * f.coords.length);
  buf.write(FIELD_MAGIC, 0, "ascii");
  buf.writeUInt32LE(FIELD_VERSION, 4);
  buf.writeUInt32LE(f.height, 8);
  buf.writeUInt32LE(f.width, 12);
  for (let i = 0; i < f.coords.length; i++) buf.writeFloatLE(f.coords[i], 16 + 4 * i);
  return buf;
}

export function decodeField(buf: Buffer, context = "field"): Field {
  if (buf.length < 16)
    throw new FormatError(`${context}: truncated header (${buf.length} bytes)`);
  const magic = buf.toString("ascii", 0, 4);
  if (magic !== FIELD_MAGIC)
    throw new FormatError(`${context}: bad magic ${JSON.stringify(magic)}, expected "${FIELD_MAGIC}"`);
  const version = buf.readUInt32LE(4);
  if (version !== FIELD_VERSION)
    throw new FormatError(`${context}: unsupported version ${version}, expected ${FIELD_VERSION}`);
  const height = buf.readUInt32LE(8);
  const width = buf.readUInt32LE(12);
  if (height < 1 || width < 1)
    throw new FormatError(`${context}: invalid dimensions ${height}x${width}`);
  const expected = height * width * 2 * 4;
  const payload = buf.subarray(16);
  if (payload.length !== expected)
    throw new FormatError(
      `${context}: payload is ${payload.length} bytes, expected ${expected} for a ${height}x${width} field`,
    );
  const coords = new Float32Array(height * width * 2);
  for (let i = 0; i < coords.length; i++) {
    coords[i] = payload.readFloatLE(4 * i);
    if (!Number.isFinite(coords[i]))
      throw new FormatError(`${context}: field contains non-finite values`);
  }
  return { height, width, coords };
}

export function readField(path: string): Field {
  return decodeField(readFileSync(path), path);
}

export function writeField(f: Field, path: string): void {
  writeFileSync(path, encodeField(f));
}
