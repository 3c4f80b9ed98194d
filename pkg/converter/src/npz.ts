/** .npz reading: a ZIP whose members are .npy payloads, keyed by member name. */

import { readFileSync } from "node:fs";
import { unzipSync } from "fflate";

import { parseNpy, type NpyArray } from "./npy.js";

export function parseNpz(bytes: Uint8Array): Record<string, NpyArray> {
  let members: Record<string, Uint8Array>;
  try {
    members = unzipSync(bytes);
  } catch (err) {
    throw new Error(`not a readable .npz archive: ${(err as Error).message}`);
  }
  const out: Record<string, NpyArray> = {};
  for (const [name, payload] of Object.entries(members)) {
    if (name.endsWith("/")) {
      continue;
    }
    const key = name.replace(/\.npy$/, "");
    try {
      out[key] = parseNpy(payload);
    } catch (err) {
      throw new Error(`member ${key}: ${(err as Error).message}`);
    }
  }
  return out;
}

export function readNpz(path: string): Record<string, NpyArray> {
  return parseNpz(new Uint8Array(readFileSync(path)));
}
