#!/usr/bin/env node
/** Command line wrapper: `medmnist <archive.npz> <out_dir>` converts a
 * benchmark archive, `amd <image_dir> <labels_file> <out_dir> [--side N]`
 * converts the fundus corpus. */

import { parseArgs } from "node:util";

import { convertAmd } from "./amd.js";
import { convert } from "./medmnist.js";

const USAGE = `usage:
  hdpan-convert medmnist <archive.npz> <out_dir>
  hdpan-convert amd <image_dir> <labels_file> <out_dir> [--side N]`;

export function run(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: { side: { type: "string", default: "28" } },
      allowPositionals: true,
    });
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 1;
  }
  const [command, ...rest] = parsed.positionals;

  try {
    if (command === "medmnist" && rest.length === 2) {
      const result = convert(rest[0]!, rest[1]!);
      const { train, val, test } = result.counts;
      console.log(
        `${result.name}: train ${train} / val ${val} / test ${test} ` +
          `(label_offset ${result.labelOffset}) -> ${rest[1]}`,
      );
      return 0;
    }
    if (command === "amd" && rest.length === 3) {
      const side = Number.parseInt(parsed.values.side as string, 10);
      if (!Number.isFinite(side) || side < 1) {
        console.error(`--side must be a positive integer, got ${parsed.values.side}`);
        return 1;
      }
      const result = convertAmd(rest[0]!, rest[1]!, rest[2]!, side);
      const { train, val, test } = result.counts;
      console.log(
        `amd: train ${train} / val ${val} / test ${test} at ` +
          `${result.side}x${result.side}x3 -> ${rest[2]}`,
      );
      return 0;
    }
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }

  console.error(USAGE);
  return 1;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
