/** Area-average downsampling for interleaved RGB rasters.
 *
 * Every output pixel is the mean of its source rectangle, with fractional
 * edge rows/columns weighted by their overlap, so the map is exact for
 * constant images and for integer block ratios.  Applied separably: rows
 * first, then columns.
 */

function axisWeights(src: number, dst: number): Array<Array<[number, number]>> {
  const scale = src / dst;
  const windows: Array<Array<[number, number]>> = [];
  for (let o = 0; o < dst; o += 1) {
    const start = o * scale;
    const end = (o + 1) * scale;
    const cover: Array<[number, number]> = [];
    for (let s = Math.floor(start); s < end && s < src; s += 1) {
      const weight = Math.min(s + 1, end) - Math.max(s, start);
      if (weight > 0) {
        cover.push([s, weight]);
      }
    }
    windows.push(cover);
  }
  return windows;
}

export function downsampleRgb(
  pixels: Uint8Array,
  height: number,
  width: number,
  side: number,
): Uint8Array {
  if (side < 1 || side > height || side > width) {
    throw new Error(
      `target side ${side} must lie in [1, min(${height}, ${width})]`,
    );
  }
  if (height === side && width === side) {
    return pixels.slice(); // lossless passthrough
  }

  const rowWindows = axisWeights(height, side);
  const colWindows = axisWeights(width, side);
  const rowScale = height / side;
  const colScale = width / side;

  // rows: (height, width, 3) -> (side, width, 3)
  const mid = new Float64Array(side * width * 3);
  for (let oy = 0; oy < side; oy += 1) {
    for (const [sy, weight] of rowWindows[oy]!) {
      const srcBase = sy * width * 3;
      const dstBase = oy * width * 3;
      for (let i = 0; i < width * 3; i += 1) {
        mid[dstBase + i]! += weight * pixels[srcBase + i]!;
      }
    }
  }

  // columns: (side, width, 3) -> (side, side, 3)
  const out = new Uint8Array(side * side * 3);
  const denom = rowScale * colScale;
  for (let oy = 0; oy < side; oy += 1) {
    for (let ox = 0; ox < side; ox += 1) {
      for (let ch = 0; ch < 3; ch += 1) {
        let total = 0;
        for (const [sx, weight] of colWindows[ox]!) {
          total += weight * mid[(oy * width + sx) * 3 + ch]!;
        }
        out[(oy * side + ox) * 3 + ch] = Math.round(total / denom);
      }
    }
  }
  return out;
}
