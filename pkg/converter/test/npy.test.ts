import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { itemSize, parseNpy } from "../src/npy";
import { parseNpz } from "../src/npz";
import { makeNpz, runFixtures, sha256, tempDir } from "./helpers";

function makeNpy(
  dir: string,
  name: string,
  array: object,
): { bytes: Uint8Array; sha: string } {
  const out = join(dir, name);
  const { sha256: sha } = runFixtures({ mode: "npy", out, array });
  return { bytes: new Uint8Array(readFileSync(out)), sha: sha! };
}

describe("parseNpy", () => {
  const dir = tempDir("npy-");

  it("reads a uint8 3d array byte for byte", () => {
    const { bytes, sha } = makeNpy(dir, "u8.npy", {
      shape: [5, 4, 3],
      seed: 1,
    });
    const arr = parseNpy(bytes);
    expect(arr.descr).toBe("|u1");
    expect(arr.shape).toEqual([5, 4, 3]);
    expect(arr.fortranOrder).toBe(false);
    expect(arr.data.length).toBe(5 * 4 * 3);
    expect(sha256(arr.data)).toBe(sha);
  });

  it("reports dtype and item size for wider types", () => {
    const f32 = makeNpy(dir, "f32.npy", {
      shape: [3, 2],
      seed: 2,
      dtype: "float32",
    });
    const arr = parseNpy(f32.bytes);
    expect(arr.descr).toBe("<f4");
    expect(itemSize(arr.descr)).toBe(4);
    expect(arr.data.length).toBe(3 * 2 * 4);
    expect(sha256(arr.data)).toBe(f32.sha);

    const i64 = makeNpy(dir, "i64.npy", {
      shape: [7],
      seed: 3,
      dtype: "int64",
      low: 0,
      high: 50,
    });
    expect(parseNpy(i64.bytes).descr).toBe("<i8");
  });

  it("flags Fortran-ordered arrays", () => {
    const { bytes } = makeNpy(dir, "fort.npy", {
      shape: [4, 6],
      seed: 4,
      fortran: true,
    });
    expect(parseNpy(bytes).fortranOrder).toBe(true);
  });

  it("reads scalar (rank 0) shapes", () => {
    const { bytes } = makeNpy(dir, "scalar.npy", { shape: [], seed: 5 });
    const arr = parseNpy(bytes);
    expect(arr.shape).toEqual([]);
    expect(arr.data.length).toBe(1);
  });

  it("rejects bad magic, bad version, and truncated payloads", () => {
    const { bytes } = makeNpy(dir, "base.npy", { shape: [4, 4], seed: 6 });

    const wrongMagic = bytes.slice();
    wrongMagic[0] = 0x50;
    expect(() => parseNpy(wrongMagic)).toThrow(/bad magic/);

    const wrongVersion = bytes.slice();
    wrongVersion[6] = 9;
    expect(() => parseNpy(wrongVersion)).toThrow(/version 9/);

    expect(() => parseNpy(bytes.subarray(0, bytes.length - 3))).toThrow(
      /truncated/,
    );
    expect(() => parseNpy(bytes.subarray(0, 4))).toThrow(/shorter/);
  });
});

describe("parseNpz", () => {
  it("extracts every member with the .npy suffix stripped", () => {
    const dir = tempDir("npz-");
    const out = join(dir, "mixed.npz");
    const shas = makeNpz(out, {
      alpha: { shape: [6, 2], seed: 7 },
      beta: { shape: [3], seed: 8, dtype: "int64", low: 0, high: 9 },
    });
    const members = parseNpz(new Uint8Array(readFileSync(out)));
    expect(Object.keys(members).sort()).toEqual(["alpha", "beta"]);
    expect(sha256(members.alpha!.data)).toBe(shas.alpha);
    expect(sha256(members.beta!.data)).toBe(shas.beta);
  });

  it("reads stored (uncompressed) archives too", () => {
    const dir = tempDir("npz-");
    const out = join(dir, "stored.npz");
    const shas = makeNpz(out, { plain: { shape: [5, 5], seed: 9 } }, false);
    const members = parseNpz(new Uint8Array(readFileSync(out)));
    expect(sha256(members.plain!.data)).toBe(shas.plain);
  });

  it("rejects non-archive bytes", () => {
    expect(() => parseNpz(new Uint8Array([1, 2, 3, 4]))).toThrow(
      /not a readable \.npz/,
    );
  });
});
