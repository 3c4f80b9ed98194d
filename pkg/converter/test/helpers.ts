import { execFileSync } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURES_PY = join(HERE, "fixtures.py");

export function runFixtures(request: object): Record<string, string> {
  const stdout = execFileSync("python3", [FIXTURES_PY, JSON.stringify(request)], {
    encoding: "utf-8",
  });
  return JSON.parse(stdout);
}

export type ArraySpec = {
  shape: number[];
  seed: number;
  dtype?: string;
  low?: number;
  high?: number;
  fortran?: boolean;
};

export function makeNpz(
  out: string,
  arrays: Record<string, ArraySpec>,
  compressed = true,
): Record<string, string> {
  return runFixtures({ mode: "npz", out, arrays, compressed });
}

export function loadWithPrimary(dir: string): {
  name: string;
  label_offset: number;
  shape: number[];
  images_sha256: string;
  labels_sha256: string;
} {
  return runFixtures({ mode: "load", dir }) as ReturnType<typeof loadWithPrimary>;
}

export function sha256(bytes: Uint8Array): string {
  return createHash("sha256").update(bytes).digest("hex");
}

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Deterministic byte pattern so fixture images differ per index. */
export function patternBytes(count: number, salt: number): Uint8Array {
  const bytes = new Uint8Array(count);
  let state = (salt * 2654435761 + 1) >>> 0;
  for (let i = 0; i < count; i += 1) {
    state = (state * 1664525 + 1013904223) >>> 0;
    bytes[i] = state >>> 24;
  }
  return bytes;
}

export function writePpm(
  path: string,
  width: number,
  height: number,
  pixels: Uint8Array,
): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, "ascii");
  writeFileSync(path, Buffer.concat([header, Buffer.from(pixels)]));
}

/** Standard MedMNIST-shaped archive spec: gray images, binary labels. */
export function benchmarkArrays(
  counts: { train: number; val: number; test: number },
  size = 28,
  seedBase = 10,
): Record<string, ArraySpec> {
  const spec: Record<string, ArraySpec> = {};
  const entries = Object.entries(counts) as Array<[string, number]>;
  for (const [i, [split, n]] of entries.entries()) {
    spec[`${split}_images`] = { shape: [n, size, size], seed: seedBase + i };
    spec[`${split}_labels`] = {
      shape: [n, 1],
      seed: seedBase + 100 + i,
      low: 0,
      high: 2,
    };
  }
  return spec;
}
