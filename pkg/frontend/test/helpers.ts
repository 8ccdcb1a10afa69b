/** @file Shared plumbing for the test suite. */

import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export const FRONTEND_ROOT = dirname(dirname(fileURLToPath(import.meta.url)));
export const CORPUS_DIR = join(FRONTEND_ROOT, "corpus");

export function corpusCases(): string[] {
  const index = JSON.parse(readFileSync(join(CORPUS_DIR, "index.json"), "utf-8")) as {
    cases: string[];
  };
  return index.cases;
}

/** Run `work` inside a fresh temp directory, removing it afterwards. */
export function withTempDir<T>(work: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "tpswarp-test-"));
  try {
    return work(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function readBytes(path: string): Buffer {
  return readFileSync(path);
}

/** Deterministic 32-bit PRNG; good enough to reproduce test instances. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Uniform integer in [lo, hi] inclusive. */
export function randInt(rand: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rand() * (hi - lo + 1));
}
