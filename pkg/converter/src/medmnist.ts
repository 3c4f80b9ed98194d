/** MedMNIST-style archive conversion.
 *
 * The source is an .npz with train/val/test image and label arrays.  Images
 * must be N x H x W (grayscale) or N x H x W x 3 (RGB) of uint8; labels one
 * uint8 per sample, stored flat or as an N x 1 column.  Pixel bytes are
 * copied verbatim, so conversion is lossless; the observed label base (0-
 * or 1-indexed) is recorded in meta as label_offset.
 */

import { basename } from "node:path";
import { join } from "node:path";

import { writeDatasetDir } from "./dataset.js";
import type { NpyArray } from "./npy.js";
import { readNpz } from "./npz.js";

const SPLITS = ["train", "val", "test"] as const;

export type ConvertResult = {
  name: string;
  labelOffset: number;
  counts: { train: number; val: number; test: number };
};

function shapeText(shape: number[]): string {
  return `(${shape.join(", ")})`;
}

function checkImages(key: string, arr: NpyArray): {
  n: number;
  h: number;
  w: number;
  c: 1 | 3;
} {
  if (arr.descr !== "|u1") {
    throw new Error(`${key}: expected uint8 pixels (|u1), got dtype ${arr.descr}`);
  }
  if (arr.fortranOrder) {
    throw new Error(`${key}: Fortran-ordered array is not supported`);
  }
  const s = arr.shape;
  if (s.length === 3) {
    return { n: s[0]!, h: s[1]!, w: s[2]!, c: 1 };
  }
  if (s.length === 4 && s[3] === 3) {
    return { n: s[0]!, h: s[1]!, w: s[2]!, c: 3 };
  }
  throw new Error(
    `${key}: expected shape N x H x W or N x H x W x 3, got ${shapeText(s)}`,
  );
}

function checkLabels(key: string, arr: NpyArray): Uint8Array {
  if (arr.descr !== "|u1") {
    throw new Error(`${key}: expected uint8 labels (|u1), got dtype ${arr.descr}`);
  }
  if (arr.fortranOrder) {
    throw new Error(`${key}: Fortran-ordered array is not supported`);
  }
  const s = arr.shape;
  if (s.length === 1 || (s.length === 2 && s[1] === 1)) {
    return arr.data;
  }
  throw new Error(`${key}: expected shape N or N x 1, got ${shapeText(s)}`);
}

function observedLabelOffset(labelsBySplit: Uint8Array[]): number {
  let min = 255;
  for (const labels of labelsBySplit) {
    for (const value of labels) {
      if (value < min) {
        min = value;
      }
    }
  }
  if (min !== 0 && min !== 1) {
    throw new Error(
      `labels start at ${min}; expected a 0- or 1-indexed label set`,
    );
  }
  return min;
}

export function convert(archivePath: string, outDir: string): ConvertResult {
  const arrays = readNpz(archivePath);
  for (const split of SPLITS) {
    for (const suffix of ["images", "labels"]) {
      if (!(`${split}_${suffix}` in arrays)) {
        throw new Error(`${archivePath}: missing array ${split}_${suffix}`);
      }
    }
  }

  const name = basename(archivePath).replace(/\.npz$/, "");
  const parts = SPLITS.map((split) => {
    const imagesKey = `${split}_images`;
    const labelsKey = `${split}_labels`;
    const dims = checkImages(imagesKey, arrays[imagesKey]!);
    const labels = checkLabels(labelsKey, arrays[labelsKey]!);
    if (labels.length !== dims.n) {
      throw new Error(
        `${imagesKey} has ${dims.n} images but ${labelsKey} has ` +
          `${labels.length} labels`,
      );
    }
    return { split, dims, labels, images: arrays[imagesKey]!.data };
  });

  const labelOffset = observedLabelOffset(parts.map((p) => p.labels));
  for (const part of parts) {
    writeDatasetDir(join(outDir, part.split), {
      name,
      height: part.dims.h,
      width: part.dims.w,
      channels: part.dims.c,
      labelOffset,
      images: part.images,
      labels: part.labels,
    });
  }
  const [train, val, test] = parts;
  return {
    name,
    labelOffset,
    counts: { train: train!.dims.n, val: val!.dims.n, test: test!.dims.n },
  };
}
