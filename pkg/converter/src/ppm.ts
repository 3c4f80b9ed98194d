/** Binary PPM (P6, maxval 255) reading: the pre-decoded interchange format
 * this tool accepts for photographic corpora. */

export type PpmImage = {
  width: number;
  height: number;
  /** height * width * 3 bytes, row major, RGB. */
  pixels: Uint8Array;
};

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function parsePpm(bytes: Uint8Array, label: string): PpmImage {
  if (bytes.length < 2 || bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new Error(`${label}: not a binary PPM (P6) file`);
  }
  let at = 2;
  const nextToken = (): number => {
    for (;;) {
      while (at < bytes.length && isSpace(bytes[at]!)) {
        at += 1;
      }
      if (at < bytes.length && bytes[at] === 0x23) {
        while (at < bytes.length && bytes[at] !== 0x0a) {
          at += 1;
        }
        continue;
      }
      break;
    }
    const start = at;
    while (at < bytes.length && !isSpace(bytes[at]!)) {
      at += 1;
    }
    if (at === start) {
      throw new Error(`${label}: truncated PPM header`);
    }
    const text = String.fromCharCode(...bytes.subarray(start, at));
    const value = Number.parseInt(text, 10);
    if (!Number.isFinite(value) || value <= 0) {
      throw new Error(`${label}: bad PPM header token ${text}`);
    }
    return value;
  };

  const width = nextToken();
  const height = nextToken();
  const maxval = nextToken();
  if (maxval !== 255) {
    throw new Error(`${label}: PPM maxval must be 255, got ${maxval}`);
  }
  at += 1; // the single whitespace byte separating header from raster
  const need = width * height * 3;
  if (bytes.length - at < need) {
    throw new Error(
      `${label}: PPM raster holds ${bytes.length - at} bytes, expected ${need}`,
    );
  }
  return { width, height, pixels: bytes.subarray(at, at + need) };
}
