/**
 * Row-wise run-length mask decoding.
 *
 * Rows encode alternating run lengths starting with background (possibly
 * a zero-length run); each row's runs must sum to the mask width.
 */

export function decodeMaskRle(rows: number[][], width: number): Uint8Array {
  const out = new Uint8Array(rows.length * width);
  for (let r = 0; r < rows.length; r++) {
    const runs = rows[r];
    let pos = 0;
    let value = 0;
    for (const run of runs) {
      if (run < 0) throw new Error(`negative run in row ${r}`);
      if (value) out.fill(1, r * width + pos, r * width + pos + run);
      pos += run;
      value = value ? 0 : 1;
    }
    if (pos !== width) {
      throw new Error(`row ${r} runs sum to ${pos}, expected ${width}`);
    }
  }
  return out;
}

/** RGBA overlay pixels for a decoded mask (foreground tinted). */
export function maskOverlayPixels(
  mask: Uint8Array,
  rgba: [number, number, number, number],
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(mask.length * 4));
  const [r, g, b, a] = rgba;
  for (let i = 0; i < mask.length; i++) {
    if (mask[i]) {
      out[i * 4] = r;
      out[i * 4 + 1] = g;
      out[i * 4 + 2] = b;
      out[i * 4 + 3] = a;
    }
  }
  return out;
}

export function maskArea(mask: Uint8Array): number {
  let total = 0;
  for (let i = 0; i < mask.length; i++) total += mask[i];
  return total;
}
