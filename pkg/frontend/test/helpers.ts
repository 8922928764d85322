import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { fileURLToPath } from "node:url";
import { dirname, join, resolve } from "node:path";

export const MANIFEST_PATH = resolve(
  dirname(fileURLToPath(import.meta.url)), "..", "..", "docs",
  "schema_manifest.json");

export function tmpDir(): string {
  return mkdtempSync(join(tmpdir(), "report-plots-"));
}

/** Deterministic pseudo-random stream (mulberry32). */
export function prng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface StabilityRowOpts {
  status?: string;
  e_h?: number;
  e_f?: number;
  sigma?: number;
}

/** Serialize a float the way the producer does (Python repr). */
function pyFloat(v: number): string {
  if (Number.isNaN(v)) return "nan";
  if (v === Infinity) return "inf";
  if (v === -Infinity) return "-inf";
  return String(v);
}

const STABILITY_HEADER =
  "seed,solver,instance,f_gt,lambda_gt,status,n_solutions,e_h,e_f,e_lam,e_r,e_t";

export function stabilityCsv(dir: string, rows: StabilityRowOpts[]): string {
  const lines = [STABILITY_HEADER];
  rows.forEach((r, i) => {
    const eh = r.e_h ?? 1e-10;
    lines.push([
      String(1000 + i), "fhf", String(i), "1.2", "-0.3", r.status ?? "ok",
      "2", pyFloat(eh), pyFloat(r.e_f ?? eh / 2), pyFloat(eh / 3),
      "0.0", pyFloat(eh * 5),
    ].join(","));
  });
  const path = join(dir, "stability.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

const NOISE_HEADER = STABILITY_HEADER + ",sigma";

export function noiseCsv(dir: string,
                         rows: Array<StabilityRowOpts & { sigma: number }>): string {
  const lines = [NOISE_HEADER];
  rows.forEach((r, i) => {
    const eh = r.e_h ?? 1e-3;
    lines.push([
      String(2000 + i), "frhfr", String(i), "1.2", "-0.3", r.status ?? "ok",
      "2", pyFloat(eh), pyFloat(r.e_f ?? eh / 2), pyFloat(eh / 3),
      "0.0", pyFloat(eh * 5), String(r.sigma),
    ].join(","));
  });
  const path = join(dir, "noise.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function curveCsv(dir: string, points: Array<[number, number, number]>): string {
  const lines = ["iteration,mean_inlier_count,mean_best_inlier_count,n_repeats"];
  for (const [it, meanCount, best] of points) {
    lines.push(`${it},${meanCount},${best},100`);
  }
  const path = join(dir, "ransac_curve.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function timingCsv(dir: string): string {
  const lines = [
    "solver,n_instances,mean_us,median_us,std_us,budget_iterations",
    "calibrated,1000,35.5,31.25,12.125,939",
    "fhf,1000,365.25,345.5,80.0625,91",
    "frhfr,1000,980.125,930.5,200.25,34",
  ];
  const path = join(dir, "timing.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function writeSpec(dir: string, spec: Record<string, unknown>): string {
  const path = join(dir, "figure.json");
  writeFileSync(path, JSON.stringify(spec, null, 2));
  return path;
}
