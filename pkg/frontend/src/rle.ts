/** Row-major run-length encoding as used by the mask/label endpoints:
 * a list of [value, runLength] pairs covering width*height pixels.
 */

export type RlePairs = [number, number][];

export function rleDecode(runs: RlePairs, width: number, height: number): Uint8Array {
  const total = runs.reduce((acc, [, n]) => acc + n, 0);
  if (total !== width * height) {
    throw new Error(`RLE covers ${total} pixels, expected ${width * height}`);
  }
  const out = new Uint8Array(width * height);
  let pos = 0;
  for (const [value, count] of runs) {
    out.fill(value, pos, pos + count);
    pos += count;
  }
  return out;
}

export function rleEncode(values: ArrayLike<number>): RlePairs {
  const n = values.length;
  if (n === 0) return [];
  const out: RlePairs = [];
  let current = values[0];
  let run = 1;
  for (let i = 1; i < n; i++) {
    if (values[i] === current) {
      run++;
    } else {
      out.push([current, run]);
      current = values[i];
      run = 1;
    }
  }
  out.push([current, run]);
  return out;
}
