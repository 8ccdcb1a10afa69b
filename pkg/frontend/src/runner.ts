/** @file Engine process boundary: run kernel operations over files.
 *
 * Every call shells out to the alignment engine's `kernel` subcommand.
 * Inputs are file paths (.tnsr tensors, .tpsf fields, .json landmarks);
 * outputs land in a caller-chosen directory and the engine reports their
 * paths on stdout as JSON. Exit 3 means degenerate landmark geometry,
 * exit 2 malformed input; both surface as exceptions carrying the
 * engine's own error text.
 */

import { spawnSync } from "node:child_process";
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { EngineError, GeometryError } from "./errors.js";

/** Parameter values accepted by kernel operations. */
export type ParamValue = number | string | number[];

export interface KernelResult {
  op: string;
  outputs: string[];
}

export interface ManifestTask {
  op: string;
  /** Input file paths; relative ones resolve against the manifest's directory. */
  inputs: string[];
  params?: Record<string, ParamValue>;
  out_dir: string;
}

/**
 * Engine argv. Override with TPSWARP_BIN (whitespace-split) to point at an
 * installed `tpswarp` script or a different interpreter.
 */
export function engineCommand(): string[] {
  const override = process.env.TPSWARP_BIN;
  if (override && override.trim() !== "") return override.trim().split(/\s+/);
  return ["python3", "-m", "tpswarp"];
}

function invoke(args: string[]): string {
  const [cmd, ...prefix] = engineCommand();
  const run = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (run.error) throw new EngineError(`failed to start engine: ${run.error.message}`, null, "");
  if (run.status !== 0) {
    const stderr = (run.stderr ?? "").trim();
    const message = stderr === "" ? `engine exited with status ${run.status}` : stderr;
    if (run.status === 3) throw new GeometryError(message, stderr);
    throw new EngineError(message, run.status, stderr);
  }
  return run.stdout;
}

function paramArg(key: string, value: ParamValue): string {
  // numbers serialize via String(), whose shortest round-trip decimal parses
  // back to the identical double on the engine side
  const text = Array.isArray(value) ? value.map(String).join(",") : String(value);
  return `${key}=${text}`;
}

/** Run one named operation; returns the engine's result manifest. */
export function runKernelOp(
  op: string,
  inputs: string[],
  params: Record<string, ParamValue>,
  outDir: string,
): KernelResult {
  mkdirSync(outDir, { recursive: true });
  const args = ["kernel", "--op", op, "--out-dir", outDir];
  for (const path of inputs) args.push("-i", path);
  for (const [key, value] of Object.entries(params)) args.push("-p", paramArg(key, value));
  return JSON.parse(invoke(args)) as KernelResult;
}

/**
 * Run a batch of operations through one engine process. The manifest file
 * is written next to nothing in particular, so tasks should use absolute
 * paths (or paths relative to the manifest's directory).
 */
export function runManifest(tasks: ManifestTask[], manifestPath: string): KernelResult[] {
  mkdirSync(dirname(manifestPath), { recursive: true });
  writeFileSync(manifestPath, JSON.stringify({ tasks }));
  const out = JSON.parse(invoke(["kernel", "--manifest", manifestPath])) as {
    results: KernelResult[];
  };
  return out.results;
}

/** The engine's reported version string. */
export function engineVersion(): string {
  return invoke(["--version"]).trim().replace(/^\S+\s+/, "");
}
