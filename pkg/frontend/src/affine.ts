/** Six-coefficient world-file transform between map-image pixels and world
 * coordinates: x = A*col + B*row + C, y = D*col + E*row + F.
 */

export interface WorldFileAffine {
  a: number; // x scale per column
  d: number; // y shear per column
  b: number; // x shear per row
  e: number; // y scale per row (negative for north-up images)
  c: number; // x of pixel (0, 0)
  f: number; // y of pixel (0, 0)
}

export function pixelToWorld(
  t: WorldFileAffine, col: number, row: number,
): { x: number; y: number } {
  return { x: t.a * col + t.b * row + t.c, y: t.d * col + t.e * row + t.f };
}

export function worldToPixel(
  t: WorldFileAffine, x: number, y: number,
): { col: number; row: number } {
  const det = t.a * t.e - t.b * t.d;
  if (det === 0) throw new Error("degenerate map transform");
  const dx = x - t.c;
  const dy = y - t.f;
  return {
    col: (t.e * dx - t.b * dy) / det,
    row: (-t.d * dx + t.a * dy) / det,
  };
}
