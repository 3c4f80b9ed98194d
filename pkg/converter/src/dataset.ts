/** Writer for the portable dataset-directory format.
 *
 * A dataset directory holds `meta` (text, `key = value` lines for name, n,
 * h, w, c, label_offset), `images.bin` (n*h*w*c bytes, uint8, C order), and
 * `labels.bin` (n bytes, uint8).  Readers ignore meta keys they do not
 * know, so converters may append documentation lines.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

export type DatasetSplit = {
  name: string;
  height: number;
  width: number;
  channels: 1 | 3;
  labelOffset: number;
  /** count * height * width * channels bytes, C order. */
  images: Uint8Array;
  /** one byte per sample. */
  labels: Uint8Array;
  /** extra `key = value` documentation lines for meta. */
  notes?: Record<string, string>;
};

export function writeDatasetDir(dir: string, split: DatasetSplit): void {
  const { name, height, width, channels, labelOffset, images, labels } = split;
  const count = labels.length;
  if (images.length !== count * height * width * channels) {
    throw new Error(
      `${name}: ${images.length} image bytes do not match ` +
        `${count}*${height}*${width}*${channels}`,
    );
  }
  const lines = [
    `name = ${name}`,
    `n = ${count}`,
    `h = ${height}`,
    `w = ${width}`,
    `c = ${channels}`,
    `label_offset = ${labelOffset}`,
  ];
  for (const [key, value] of Object.entries(split.notes ?? {})) {
    lines.push(`${key} = ${value}`);
  }
  mkdirSync(dir, { recursive: true });
  writeFileSync(join(dir, "meta"), lines.join("\n") + "\n");
  writeFileSync(join(dir, "images.bin"), images);
  writeFileSync(join(dir, "labels.bin"), labels);
}
