import { describe, expect, it } from "vitest";
import { spawnSync } from "node:child_process";
import {
  cameraTxt,
  g17,
  gcpsCsv,
  parseCameraTxt,
  parseGcpsCsv,
  parseSeedsCsv,
  seedsCsv,
  type CameraParams,
} from "../src/format.js";

describe("g17", () => {
  it("handles plain values", () => {
    expect(g17(0)).toBe("0");
    expect(g17(-0)).toBe("-0");
    expect(g17(1)).toBe("1");
    expect(g17(-2.5)).toBe("-2.5");
    expect(g17(100)).toBe("100");
    expect(g17(0.001)).toBe("0.001");
    expect(g17(NaN)).toBe("nan");
    expect(g17(Infinity)).toBe("inf");
    expect(g17(-Infinity)).toBe("-inf");
  });

  it("switches to scientific notation outside the fixed range", () => {
    expect(g17(1e-5)).toBe("1.0000000000000001e-05");
    expect(g17(1e17)).toBe("1e+17");
    expect(g17(1e16)).toBe("10000000000000000");
  });

  it("round-trips through Number exactly", () => {
    const values = [Math.PI, 1 / 3, 123456.789, 2 ** 53 - 1, 5e-324,
                    1.7976931348623157e308, -0.1, 600.0];
    for (const v of values) expect(Number(g17(v))).toBe(v);
  });

  it("matches a reference %.17g formatter on random doubles", () => {
    const values: number[] = [];
    let state = 0x12345678;
    const rand = () => {
      // xorshift32, deterministic across runs
      state ^= state << 13; state >>>= 0;
      state ^= state >>> 17;
      state ^= state << 5; state >>>= 0;
      return state / 0x100000000;
    };
    for (let i = 0; i < 300; i++) {
      const exp = Math.floor(rand() * 60) - 30;
      values.push((rand() * 2 - 1) * 10 ** exp);
    }
    values.push(0, -0, 1e-4, 9.999e-5, 1e17 - 2, 0.5, 2.0, 600.0);

    const buf = Buffer.alloc(8);
    const hex = values.map((v) => {
      buf.writeDoubleLE(v);
      return buf.toString("hex");
    });
    const script = [
      "import struct, sys",
      "for line in sys.stdin:",
      "    (v,) = struct.unpack('<d', bytes.fromhex(line.strip()))",
      "    print(f'{v:.17g}')",
    ].join("\n");
    const res = spawnSync("python3", ["-c", script], {
      input: hex.join("\n") + "\n",
      encoding: "utf8",
    });
    expect(res.status).toBe(0);
    const expected = res.stdout.trim().split("\n");
    expect(expected.length).toBe(values.length);
    values.forEach((v, i) => {
      expect(g17(v), `value ${v}`).toBe(expected[i]);
    });
  });
});

describe("seeds csv", () => {
  it("round-trips", () => {
    const seeds = [
      { row: 170, col: 12, label: "dry" as const },
      { row: 25, col: 80, label: "wet" as const },
    ];
    const text = seedsCsv(seeds);
    expect(text).toBe("row,col,label\n170,12,dry\n25,80,wet\n");
    expect(parseSeedsCsv(text)).toEqual(seeds);
  });

  it("rejects bad headers and labels", () => {
    expect(() => parseSeedsCsv("x,y,label\n")).toThrow(/header/);
    expect(() => parseSeedsCsv("row,col,label\n1,2,damp\n")).toThrow(/label/);
  });
});

describe("gcps csv", () => {
  it("round-trips with full precision", () => {
    const gcps = [{ u: 12.5, v: 80.25, x: Math.PI, y: -41.6, z: 1 / 3 }];
    const parsed = parseGcpsCsv(gcpsCsv(gcps));
    expect(parsed).toEqual(gcps);
    expect(gcpsCsv(gcps).split("\n")[0]).toBe("u,v,X,Y,Z");
  });
});

describe("camera txt", () => {
  const camera: CameraParams = {
    fx: 400, fy: 400.5, cx: 160, cy: 90,
    omega: Math.PI / 2 + 0.55, phi: 0.01, kappa: -0.02,
    tx: 1.25, ty: -2.5, tz: -9,
  };

  it("round-trips", () => {
    expect(parseCameraTxt(cameraTxt(camera))).toEqual(camera);
  });

  it("keeps a stable key order", () => {
    const keys = cameraTxt(camera)
      .trim().split("\n").map((l) => l.split(" = ")[0]);
    expect(keys).toEqual(
      ["fx", "fy", "cx", "cy", "omega", "phi", "kappa", "tx", "ty", "tz"]);
  });

  it("ignores comments and rejects missing keys", () => {
    const text = "# pose\n" + cameraTxt(camera);
    expect(parseCameraTxt(text)).toEqual(camera);
    expect(() => parseCameraTxt("fx = 1\n")).toThrow(/missing/);
  });
});
