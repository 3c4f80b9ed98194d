/** AMD fundus corpus conversion.
 *
 * The corpus is a directory of pre-decoded binary PPM (P6) color images and
 * a labels file of `filename label` lines with binary labels.  Images are
 * area-average downsampled to side x side x 3 and split 240 train / 160
 * test in sorted filename order, matching the benchmark's published split
 * sizes.  The benchmark ships no validation split, so the last 20% of a
 * seeded shuffle of the training images is copied into val/; those images
 * stay in train/ so the published training size is preserved, and the
 * carve is documented in the val meta.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { writeDatasetDir } from "./dataset.js";
import { parsePpm } from "./ppm.js";
import { downsampleRgb } from "./resample.js";

const TRAIN_COUNT = 240;
const TEST_COUNT = 160;
const VAL_FRACTION = 0.2;
const CARVE_SEED = 0;
const DATASET_NAME = "amd";

export type AmdResult = {
  counts: { train: number; val: number; test: number };
  side: number;
};

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), a | 1);
    t = (t + Math.imul(t ^ (t >>> 7), t | 61)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled(n: number, seed: number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  const next = mulberry32(seed);
  for (let i = n - 1; i > 0; i -= 1) {
    const j = Math.floor(next() * (i + 1));
    const tmp = order[i]!;
    order[i] = order[j]!;
    order[j] = tmp;
  }
  return order;
}

function readLabelsFile(path: string): Map<string, number> {
  const labels = new Map<string, number>();
  const lines = readFileSync(path, "utf-8").split("\n");
  for (const [lineNo, raw] of lines.entries()) {
    const line = raw.trim();
    if (line.length === 0 || line.startsWith("#")) {
      continue;
    }
    const parts = line.split(/\s+/);
    if (parts.length !== 2) {
      throw new Error(`${path}:${lineNo + 1}: expected "filename label"`);
    }
    const [name, labelText] = parts;
    const label = Number.parseInt(labelText!, 10);
    if (label !== 0 && label !== 1) {
      throw new Error(
        `${path}:${lineNo + 1}: label must be 0 or 1, got ${labelText}`,
      );
    }
    if (labels.has(name!)) {
      throw new Error(`${path}:${lineNo + 1}: duplicate entry for ${name}`);
    }
    labels.set(name!, label);
  }
  return labels;
}

function gatherSplit(
  names: string[],
  imageDir: string,
  labels: Map<string, number>,
  side: number,
): { images: Uint8Array; labelBytes: Uint8Array } {
  const images = new Uint8Array(names.length * side * side * 3);
  const labelBytes = new Uint8Array(names.length);
  for (const [i, name] of names.entries()) {
    const ppm = parsePpm(new Uint8Array(readFileSync(join(imageDir, name))), name);
    const small = downsampleRgb(ppm.pixels, ppm.height, ppm.width, side);
    images.set(small, i * side * side * 3);
    labelBytes[i] = labels.get(name)!;
  }
  return { images, labelBytes };
}

export function convertAmd(
  imageDir: string,
  labelsFile: string,
  outDir: string,
  side = 28,
): AmdResult {
  const labels = readLabelsFile(labelsFile);
  const found = readdirSync(imageDir)
    .filter((name) => name.endsWith(".ppm"))
    .sort();

  if (found.length !== labels.size) {
    throw new Error(
      `${labelsFile} lists ${labels.size} entries but ${imageDir} holds ` +
        `${found.length} .ppm images`,
    );
  }
  for (const name of found) {
    if (!labels.has(name)) {
      throw new Error(`${imageDir}/${name} has no entry in ${labelsFile}`);
    }
  }
  const total = TRAIN_COUNT + TEST_COUNT;
  if (found.length !== total) {
    throw new Error(
      `corpus must hold ${TRAIN_COUNT} train + ${TEST_COUNT} test = ` +
        `${total} images, got ${found.length}`,
    );
  }

  const trainNames = found.slice(0, TRAIN_COUNT);
  const testNames = found.slice(TRAIN_COUNT);
  const carveCount = Math.round(TRAIN_COUNT * VAL_FRACTION);
  const valNames = shuffled(TRAIN_COUNT, CARVE_SEED)
    .slice(TRAIN_COUNT - carveCount)
    .sort((a, b) => a - b)
    .map((i) => trainNames[i]!);

  const base = { name: DATASET_NAME, height: side, width: side };
  const common = { ...base, channels: 3 as const, labelOffset: 0 };

  const train = gatherSplit(trainNames, imageDir, labels, side);
  writeDatasetDir(join(outDir, "train"), {
    ...common,
    images: train.images,
    labels: train.labelBytes,
  });

  const val = gatherSplit(valNames, imageDir, labels, side);
  writeDatasetDir(join(outDir, "val"), {
    ...common,
    images: val.images,
    labels: val.labelBytes,
    notes: {
      carved_from: "train",
      carve_seed: String(CARVE_SEED),
      carve_rule:
        "last 20 percent of a seeded shuffle of train; these images remain in train",
    },
  });

  const test = gatherSplit(testNames, imageDir, labels, side);
  writeDatasetDir(join(outDir, "test"), {
    ...common,
    images: test.images,
    labels: test.labelBytes,
  });

  return {
    counts: {
      train: trainNames.length,
      val: valNames.length,
      test: testNames.length,
    },
    side,
  };
}
