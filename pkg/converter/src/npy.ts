/** Minimal .npy reader: header metadata plus the raw little-endian payload. */

export type NpyArray = {
  descr: string;
  shape: number[];
  fortranOrder: boolean;
  /** Raw element bytes, C order, exactly as stored. */
  data: Uint8Array;
};

const MAGIC = "\x93NUMPY";

function parseHeaderDict(raw: string): {
  descr: string;
  shape: number[];
  fortranOrder: boolean;
} {
  const descr = /'descr':\s*'([^']+)'/.exec(raw)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(raw)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(raw)?.[1];
  if (descr === undefined || shapeText === undefined || fortran === undefined) {
    throw new Error(`malformed .npy header: ${raw.trim()}`);
  }
  const shape = shapeText
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => {
      const n = Number.parseInt(part, 10);
      if (!Number.isFinite(n) || n < 0) {
        throw new Error(`bad dimension ${part} in .npy shape (${shapeText})`);
      }
      return n;
    });
  return { descr, shape, fortranOrder: fortran === "True" };
}

export function itemSize(descr: string): number {
  const m = /^[<>|=]?[a-zA-Z](\d+)$/.exec(descr);
  if (m === null) {
    throw new Error(`cannot determine item size of dtype ${descr}`);
  }
  return Number.parseInt(m[1]!, 10);
}

export function parseNpy(bytes: Uint8Array): NpyArray {
  if (bytes.length < 10) {
    throw new Error(".npy payload shorter than its fixed header");
  }
  const magic = String.fromCharCode(...bytes.subarray(0, 6));
  if (magic !== MAGIC) {
    throw new Error("not a .npy payload (bad magic)");
  }
  const major = bytes[6]!;
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let headerLength: number;
  let headerOffset: number;
  if (major === 1) {
    headerLength = view.getUint16(8, true);
    headerOffset = 10;
  } else if (major === 2 || major === 3) {
    headerLength = view.getUint32(8, true);
    headerOffset = 12;
  } else {
    throw new Error(`unsupported .npy version ${major}.${bytes[7]}`);
  }
  const headerRaw = new TextDecoder().decode(
    bytes.subarray(headerOffset, headerOffset + headerLength),
  );
  const { descr, shape, fortranOrder } = parseHeaderDict(headerRaw);

  const count = shape.reduce((acc, value) => acc * value, 1);
  const dataOffset = headerOffset + headerLength;
  const dataLength = count * itemSize(descr);
  if (bytes.length < dataOffset + dataLength) {
    throw new Error(
      `.npy payload truncated: need ${dataLength} data bytes, have ${
        bytes.length - dataOffset
      }`,
    );
  }
  return {
    descr,
    shape,
    fortranOrder,
    data: bytes.subarray(dataOffset, dataOffset + dataLength),
  };
}
