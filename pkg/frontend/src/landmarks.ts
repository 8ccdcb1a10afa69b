/** @file Landmark sets and their JSON interchange schema.
 *
 * A landmark file is {"version": 1, "width", "height", "n_per_group",
 * "groups": [{"name", "points": [[x, y], ...]}, ...]} with pixel
 * coordinates inside [0, width) x [0, height), every group holding exactly
 * n_per_group points, and group names unique. Validation mirrors the
 * engine's loader so a set the bindings accept is a set the engine accepts.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FormatError } from "./errors.js";

export const LANDMARK_FORMAT_VERSION = 1;

export interface LandmarkGroup {
  readonly name: string;
  /** Pixel-space [x, y] pairs. */
  readonly points: readonly (readonly [number, number])[];
}

export interface LandmarkSet {
  readonly width: number;
  readonly height: number;
  readonly nPerGroup: number;
  readonly groups: readonly LandmarkGroup[];
}

function checkPositiveInt(value: unknown, label: string): number {
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1)
    throw new FormatError(`${label} must be a positive integer, got ${JSON.stringify(value)}`);
  return value;
}

/** Validate a landmark set, throwing on the first violated rule. */
export function validateLandmarks(set: LandmarkSet): LandmarkSet {
  checkPositiveInt(set.width, "width");
  checkPositiveInt(set.height, "height");
  checkPositiveInt(set.nPerGroup, "n_per_group");
  if (!Array.isArray(set.groups) || set.groups.length === 0)
    throw new FormatError("a landmark set needs at least one group");
  const seen = new Set<string>();
  for (const group of set.groups) {
    if (typeof group.name !== "string" || group.name === "")
      throw new FormatError("group name must be a non-empty string");
    if (seen.has(group.name)) throw new FormatError(`duplicate group name '${group.name}'`);
    seen.add(group.name);
    if (group.points.length !== set.nPerGroup)
      throw new FormatError(
        `group '${group.name}' has ${group.points.length} points, expected ${set.nPerGroup}`,
      );
    for (const point of group.points) {
      if (point.length !== 2 || !Number.isFinite(point[0]) || !Number.isFinite(point[1]))
        throw new FormatError(`group '${group.name}': points must be finite [x, y] pairs`);
      const [x, y] = point;
      if (x < 0 || x >= set.width || y < 0 || y >= set.height)
        throw new FormatError(
          `group '${group.name}' has points outside [0, ${set.width}) x [0, ${set.height})`,
        );
    }
  }
  return set;
}

export function encodeLandmarks(set: LandmarkSet): string {
  validateLandmarks(set);
  const doc = {
    version: LANDMARK_FORMAT_VERSION,
    width: set.width,
    height: set.height,
    n_per_group: set.nPerGroup,
    groups: set.groups.map((g) => ({ name: g.name, points: g.points.map((p) => [p[0], p[1]]) })),
  };
  return JSON.stringify(doc, null, 2) + "\n";
}

export function decodeLandmarks(text: string, context = "landmarks"): LandmarkSet {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new FormatError(`${context}: invalid JSON: ${(exc as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc))
    throw new FormatError(`${context}: top-level value must be an object`);
  const obj = doc as Record<string, unknown>;
  for (const key of ["version", "width", "height", "n_per_group", "groups"])
    if (!(key in obj)) throw new FormatError(`${context}: missing required key '${key}'`);
  if (obj.version !== LANDMARK_FORMAT_VERSION)
    throw new FormatError(
      `${context}: unsupported version ${JSON.stringify(obj.version)}, expected ${LANDMARK_FORMAT_VERSION}`,
    );
  if (!Array.isArray(obj.groups)) throw new FormatError(`${context}: key 'groups' must be a list`);
  const groups: LandmarkGroup[] = obj.groups.map((entry, index) => {
    if (typeof entry !== "object" || entry === null)
      throw new FormatError(`${context}: groups[${index}] must be an object`);
    const g = entry as Record<string, unknown>;
    if (typeof g.name !== "string")
      throw new FormatError(`${context}: groups[${index}] needs a string 'name'`);
    if (!Array.isArray(g.points))
      throw new FormatError(`${context}: groups[${index}] needs a 'points' list`);
    const points = g.points.map((p, pi) => {
      if (!Array.isArray(p) || p.length !== 2 || typeof p[0] !== "number" || typeof p[1] !== "number")
        throw new FormatError(
          `${context}: groups[${index}] ('${g.name}'): points[${pi}] must be a [x, y] number pair`,
        );
      return [p[0], p[1]] as [number, number];
    });
    return { name: g.name, points };
  });
  const set: LandmarkSet = {
    width: obj.width as number,
    height: obj.height as number,
    nPerGroup: obj.n_per_group as number,
    groups,
  };
  try {
    return validateLandmarks(set);
  } catch (exc) {
    throw new FormatError(`${context}: ${(exc as Error).message}`);
  }
}

export function readLandmarks(path: string): LandmarkSet {
  return decodeLandmarks(readFileSync(path, "utf-8"), path);
}

export function writeLandmarks(set: LandmarkSet, path: string): void {
  writeFileSync(path, encodeLandmarks(set));
}
