/** Serialization of the session to the pipeline's on-disk file formats.
 *
 * Numbers are written with 17 significant digits in the same textual form
 * the pipeline itself emits, so exported files round-trip through the CLI
 * without modification.
 */

export type SeedLabel = "dry" | "wet";

export interface Seed {
  row: number;
  col: number;
  label: SeedLabel;
}

export interface GcpPair {
  u: number;
  v: number;
  x: number;
  y: number;
  z: number;
}

export interface CameraParams {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  omega: number;
  phi: number;
  kappa: number;
  tx: number;
  ty: number;
  tz: number;
}

export const CAMERA_KEYS: (keyof CameraParams)[] = [
  "fx", "fy", "cx", "cy", "omega", "phi", "kappa", "tx", "ty", "tz",
];

/** Exact decimal expansion of a finite nonzero double as significant
 * digits plus a decimal exponent (value = 0.d1d2... * 10^(exp+1), i.e.
 * d1.d2... * 10^exp). BigInt arithmetic keeps every digit exact. */
function exactDigits(x: number): { digits: string; exp: number } {
  const view = new DataView(new ArrayBuffer(8));
  view.setFloat64(0, Math.abs(x));
  const bits = view.getBigUint64(0);
  const biased = Number((bits >> 52n) & 0x7ffn);
  const frac = bits & ((1n << 52n) - 1n);
  let m: bigint;
  let e: number;
  if (biased === 0) {
    m = frac;
    e = -1074;
  } else {
    m = frac | (1n << 52n);
    e = biased - 1075;
  }
  // value = m * 2^e; multiply by 5^-e (e < 0) or 2^e to get pure digits
  const s = e >= 0 ? (m << BigInt(e)).toString() : (m * 5n ** BigInt(-e)).toString();
  return { digits: s, exp: s.length - 1 + Math.min(e, 0) };
}

/** Round a digit string to `n` significant digits, half to even (the
 * rounding C printf uses). Returns digits plus the exponent carry. */
function roundDigits(digits: string, n: number): { digits: string; carry: number } {
  if (digits.length <= n) return { digits, carry: 0 };
  const keep = digits.slice(0, n);
  const rest = digits.slice(n);
  const first = rest[0];
  let up: boolean;
  if (first > "5") up = true;
  else if (first < "5") up = false;
  else if (/[1-9]/.test(rest.slice(1))) up = true;
  else up = (keep.charCodeAt(n - 1) - 48) % 2 === 1; // exact tie
  if (!up) return { digits: keep, carry: 0 };
  const bumped = (BigInt(keep) + 1n).toString();
  if (bumped.length > n) return { digits: bumped.slice(0, n), carry: 1 };
  return { digits: bumped.padStart(n, "0"), carry: 0 };
}

/** Format like C's %.17g: 17 significant digits, trailing zeros stripped,
 * scientific notation outside [1e-4, 1e17) with a two-digit exponent. */
export function g17(x: number): string {
  if (Number.isNaN(x)) return "nan";
  if (!Number.isFinite(x)) return x > 0 ? "inf" : "-inf";
  if (x === 0) return Object.is(x, -0) ? "-0" : "0";
  const sign = x < 0 ? "-" : "";
  const exact = exactDigits(x);
  const rounded = roundDigits(exact.digits, 17);
  let digits = rounded.digits.replace(/0+$/, "");
  if (digits === "") digits = "0";
  const exp = exact.exp + rounded.carry;
  if (exp >= -4 && exp < 17) {
    if (exp >= digits.length - 1) {
      return sign + digits + "0".repeat(exp - (digits.length - 1));
    }
    if (exp >= 0) {
      return sign + digits.slice(0, exp + 1) + "." + digits.slice(exp + 1);
    }
    return sign + "0." + "0".repeat(-exp - 1) + digits;
  }
  const mant = digits.length > 1 ? digits[0] + "." + digits.slice(1) : digits;
  const esign = exp < 0 ? "-" : "+";
  const eabs = String(Math.abs(exp)).padStart(2, "0");
  return sign + mant + "e" + esign + eabs;
}

export function seedsCsv(seeds: readonly Seed[]): string {
  const lines = ["row,col,label"];
  for (const s of seeds) lines.push(`${s.row},${s.col},${s.label}`);
  return lines.join("\n") + "\n";
}

export function parseSeedsCsv(text: string): Seed[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines[0] !== "row,col,label") {
    throw new Error(`expected header row,col,label, got ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [row, col, label] = line.split(",");
    if (label !== "dry" && label !== "wet") {
      throw new Error(`unknown seed label ${label}`);
    }
    return { row: parseInt(row, 10), col: parseInt(col, 10), label };
  });
}

export function gcpsCsv(gcps: readonly GcpPair[]): string {
  const lines = ["u,v,X,Y,Z"];
  for (const g of gcps) {
    lines.push([g.u, g.v, g.x, g.y, g.z].map(g17).join(","));
  }
  return lines.join("\n") + "\n";
}

export function parseGcpsCsv(text: string): GcpPair[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines[0] !== "u,v,X,Y,Z") {
    throw new Error(`expected header u,v,X,Y,Z, got ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [u, v, x, y, z] = line.split(",").map(Number);
    return { u, v, x, y, z };
  });
}

export function cameraTxt(camera: CameraParams): string {
  return CAMERA_KEYS.map((k) => `${k} = ${g17(camera[k])}`).join("\n") + "\n";
}

export function parseCameraTxt(text: string): CameraParams {
  const values: Partial<Record<keyof CameraParams, number>> = {};
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new Error(`expected key = value, got ${line}`);
    const key = line.slice(0, eq).trim() as keyof CameraParams;
    values[key] = Number(line.slice(eq + 1).trim());
  }
  for (const k of CAMERA_KEYS) {
    if (values[k] === undefined) throw new Error(`camera file missing ${k}`);
  }
  return values as CameraParams;
}
