import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { RenderError } from "../src/errors.js";
import { loadSpec, render, renderSpecFile, sidecarPathFor } from "../src/render.js";
import {
  MANIFEST_PATH,
  curveCsv,
  noiseCsv,
  prng,
  stabilityCsv,
  timingCsv,
  tmpDir,
  writeSpec,
} from "./helpers.js";

function histogramSpec(dir: string, overrides: Record<string, unknown> = {}) {
  return writeSpec(dir, {
    kind: "histogram",
    input: "stability.csv",
    schema: "stability",
    manifest: MANIFEST_PATH,
    output: "figure.svg",
    column: "e_h",
    transform: "log10",
    bins: 10,
    ...overrides,
  });
}

// Independent quantile recomputation, written separately from src/stats.ts.
function refQuantile(values: number[], q: number): number {
  const v = [...values].sort((a, b) => a - b);
  const pos = q * (v.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  return v[lo]! * (1 - (pos - lo)) + v[hi]! * (pos - lo);
}

describe("histogram figure", () => {
  it("sidecar bin counts sum to the plotted row count", () => {
    const dir = tmpDir();
    const rand = prng(7);
    const rows = Array.from({ length: 83 }, () => ({
      e_h: Math.pow(10, -14 + 10 * rand()),
    }));
    stabilityCsv(dir, rows);
    const result = renderSpecFile(histogramSpec(dir));
    const counts = result.sidecar["counts"] as number[];
    expect(counts.reduce((a, b) => a + b, 0)).toBe(83);
    expect(result.sidecar["n_used"]).toBe(83);
    expect(result.sidecar["n_rows"]).toBe(83);
  });

  it("sidecar counts and edges equal independent recomputation", () => {
    const dir = tmpDir();
    const rand = prng(21);
    const values = Array.from({ length: 200 }, () => Math.pow(10, -12 + 8 * rand()));
    stabilityCsv(dir, values.map((e_h) => ({ e_h })));
    const result = renderSpecFile(histogramSpec(dir, { bins: 16 }));
    const edges = result.sidecar["bin_edges"] as number[];
    const counts = result.sidecar["counts"] as number[];

    const logs = values.map(Math.log10);
    const lo = Math.min(...logs);
    const hi = Math.max(...logs);
    for (let i = 0; i <= 16; i++) {
      expect(Math.abs(edges[i]! - (lo + ((hi - lo) * i) / 16))).toBeLessThanOrEqual(1e-12);
    }
    const ref = new Array<number>(16).fill(0);
    for (const v of logs) {
      let k = 15;
      for (let i = 0; i < 16; i++) {
        if (v >= edges[i]! && v < edges[i + 1]!) { k = i; break; }
      }
      ref[k]!++;
    }
    expect(counts).toEqual(ref);
    expect(Math.abs((result.sidecar["min"] as number) - lo)).toBeLessThanOrEqual(1e-12);
    expect(Math.abs((result.sidecar["max"] as number) - hi)).toBeLessThanOrEqual(1e-12);
  });

  it("excludes failed rows and counts them", () => {
    const dir = tmpDir();
    stabilityCsv(dir, [
      { e_h: 1e-9 }, { e_h: 1e-8 },
      { status: "no-solution", e_h: NaN },
    ]);
    const result = renderSpecFile(histogramSpec(dir));
    expect(result.sidecar["n_rows"]).toBe(3);
    expect(result.sidecar["n_used"]).toBe(2);
    expect(result.sidecar["n_excluded"]).toBe(1);
  });
});

describe("boxplot figure", () => {
  it("sidecar quantiles equal independent recomputation per group", () => {
    const dir = tmpDir();
    const rand = prng(5);
    const sigmas = [0, 0.5, 1];
    const rows = sigmas.flatMap((sigma) =>
      Array.from({ length: 41 }, () => ({ sigma, e_f: 0.01 * sigma + rand() * 0.02 })));
    noiseCsv(dir, rows);
    const spec = writeSpec(dir, {
      kind: "boxplot",
      input: "noise.csv",
      schema: "noise",
      manifest: MANIFEST_PATH,
      output: "box.svg",
      column: "e_f",
      groupBy: "sigma",
    });
    const result = renderSpecFile(spec);
    const groups = result.sidecar["groups"] as Array<Record<string, number | string>>;
    expect(groups.map((g) => g["key"])).toEqual(["0", "0.5", "1"]);
    for (const g of groups) {
      const raw = rows
        .filter((r) => String(r.sigma) === g["key"])
        .map((r) => r.e_f!);
      expect(g["n"]).toBe(raw.length);
      for (const [field, q] of [["q25", 0.25], ["median", 0.5], ["q75", 0.75]] as const) {
        expect(Math.abs((g[field] as number) - refQuantile(raw, q))).toBeLessThanOrEqual(1e-12);
      }
      expect(g["min"]).toBe(Math.min(...raw));
      expect(g["max"]).toBe(Math.max(...raw));
    }
  });
});

describe("timeseries figure", () => {
  it("sidecar restates the plotted series exactly", () => {
    const dir = tmpDir();
    const points: Array<[number, number, number]> = Array.from(
      { length: 30 }, (_, i) => [i + 1, 100 + i, 110 + i]);
    curveCsv(dir, points);
    const spec = writeSpec(dir, {
      kind: "timeseries",
      input: "ransac_curve.csv",
      schema: "ransac_curve",
      manifest: MANIFEST_PATH,
      output: "curve.svg",
      x: "iteration",
      y: ["mean_inlier_count", "mean_best_inlier_count"],
    });
    const result = renderSpecFile(spec);
    const series = result.sidecar["series"] as Array<{ name: string; values: number[] }>;
    expect(series[0]!.values).toEqual(points.map((p) => p[1]));
    expect(series[1]!.values).toEqual(points.map((p) => p[2]));
    const final = result.sidecar["final"] as Record<string, number>;
    expect(final["mean_best_inlier_count"]).toBe(139);
    const means = result.sidecar["mean"] as Record<string, number>;
    const ref = points.reduce((a, p) => a + p[1], 0) / points.length;
    expect(Math.abs(means["mean_inlier_count"]! - ref)).toBeLessThanOrEqual(1e-12);
  });
});

describe("table figure", () => {
  it("sidecar echoes every cell with exact values", () => {
    const dir = tmpDir();
    timingCsv(dir);
    const spec = writeSpec(dir, {
      kind: "table",
      input: "timing.csv",
      schema: "timing",
      manifest: MANIFEST_PATH,
      output: "table.svg",
      columns: ["solver", "mean_us", "budget_iterations"],
    });
    const result = renderSpecFile(spec);
    expect(result.sidecar["rows"]).toEqual([
      ["calibrated", 35.5, 939],
      ["fhf", 365.25, 91],
      ["frhfr", 980.125, 34],
    ]);
  });
});

describe("rendering behaviour", () => {
  it("is byte-identical across reruns on identical input", () => {
    const dir = tmpDir();
    const rand = prng(3);
    stabilityCsv(dir, Array.from({ length: 50 }, () => ({ e_h: rand() })));
    const spec = histogramSpec(dir, { transform: "none" });
    renderSpecFile(spec);
    const svg1 = readFileSync(join(dir, "figure.svg"));
    const side1 = readFileSync(sidecarPathFor(join(dir, "figure.svg")));
    renderSpecFile(spec);
    expect(readFileSync(join(dir, "figure.svg"))).toEqual(svg1);
    expect(readFileSync(sidecarPathFor(join(dir, "figure.svg")))).toEqual(side1);
  });

  it("never mutates the input file", () => {
    const dir = tmpDir();
    const csv = stabilityCsv(dir, [{ e_h: 1e-7 }, { e_h: 1e-6 }]);
    const before = readFileSync(csv);
    renderSpecFile(histogramSpec(dir));
    expect(readFileSync(csv)).toEqual(before);
  });

  it("rejects an empty CSV and writes no output", () => {
    const dir = tmpDir();
    stabilityCsv(dir, []);
    const spec = histogramSpec(dir);
    expect(() => renderSpecFile(spec)).toThrowError(RenderError);
    expect(existsSync(join(dir, "figure.svg"))).toBe(false);
    expect(existsSync(sidecarPathFor(join(dir, "figure.svg")))).toBe(false);
  });

  it("rejects a header that does not match the declared schema", () => {
    const dir = tmpDir();
    writeFileSync(join(dir, "stability.csv"), "a,b,c\n1,2,3\n");
    let category = "";
    try {
      renderSpecFile(histogramSpec(dir));
    } catch (err) {
      category = (err as RenderError).category;
    }
    expect(category).toBe("schema-error");
  });

  it("writes the SVG next to a valid sidecar", () => {
    const dir = tmpDir();
    stabilityCsv(dir, [{ e_h: 1e-9 }, { e_h: 1e-7 }, { e_h: 1e-5 }]);
    const result = renderSpecFile(histogramSpec(dir));
    const svgText = readFileSync(result.svgPath, "utf8");
    expect(svgText.startsWith("<svg ")).toBe(true);
    expect(svgText.trimEnd().endsWith("</svg>")).toBe(true);
    const sidecar = JSON.parse(readFileSync(result.sidecarPath, "utf8"));
    expect(sidecar).toEqual(result.sidecar);
  });

  it("resolves spec-relative paths", () => {
    const dir = tmpDir();
    stabilityCsv(dir, [{ e_h: 1e-8 }]);
    const spec = loadSpec(histogramSpec(dir));
    expect(spec.input).toBe(join(dir, "stability.csv"));
    const result = render(spec);
    expect(result.svgPath).toBe(join(dir, "figure.svg"));
  });
});
