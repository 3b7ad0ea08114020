import type { Rle } from "./types.js";

/**
 * Decode a row-major run-length mask (counts alternate zero/one runs,
 * starting with zeros) into a flat 0/1 byte array of length height*width.
 */
export function decodeRle(rle: Rle): Uint8Array {
  const [height, width] = rle.size;
  const total = height * width;
  const out = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const count of rle.counts) {
    if (count < 0 || pos + count > total) {
      throw new Error(`malformed RLE: run of ${count} at offset ${pos}`);
    }
    if (value === 1) {
      out.fill(1, pos, pos + count);
    }
    pos += count;
    value ^= 1;
  }
  if (pos !== total) {
    throw new Error(`malformed RLE: counts sum to ${pos}, expected ${total}`);
  }
  return out;
}
