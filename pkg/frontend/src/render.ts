import { readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { loadManifest, readCsv } from "./csv.js";
import { usageError } from "./errors.js";
import { renderers } from "./figures.js";
import { FigureSpec, figureSpecSchema } from "./spec.js";

export interface RenderResult {
  svgPath: string;
  sidecarPath: string;
  sidecar: Record<string, unknown>;
}

export function loadSpec(specPath: string): FigureSpec {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(specPath, "utf8"));
  } catch (err) {
    throw usageError(`cannot read figure spec ${specPath}: ${err}`);
  }
  const parsed = figureSpecSchema.safeParse(doc);
  if (!parsed.success) {
    throw usageError(`invalid figure spec ${specPath}: ${parsed.error.message}`);
  }
  // Paths in the spec are relative to the spec file itself.
  const base = dirname(resolve(specPath));
  const spec = parsed.data;
  spec.input = resolve(base, spec.input);
  spec.manifest = resolve(base, spec.manifest);
  spec.output = resolve(base, spec.output);
  return spec;
}

export function sidecarPathFor(outputPath: string): string {
  return outputPath.replace(/\.svg$/, "") + ".stats.json";
}

/** Stable serialization: insertion-ordered keys, trailing newline. */
export function serializeSidecar(sidecar: Record<string, unknown>): string {
  return JSON.stringify(sidecar, null, 2) + "\n";
}

/**
 * Render a figure: all validation and statistics run before anything is
 * written, so an invalid or empty input produces no output file at all.
 */
export function render(spec: FigureSpec): RenderResult {
  const manifest = loadManifest(spec.manifest);
  const rows = readCsv(spec.input, spec.schema, manifest);
  const figure = renderers[spec.kind](spec, rows);
  const sidecarPath = sidecarPathFor(spec.output);
  writeFileSync(spec.output, figure.svg);
  writeFileSync(sidecarPath, serializeSidecar(figure.sidecar));
  return { svgPath: spec.output, sidecarPath, sidecar: figure.sidecar };
}

export function renderSpecFile(specPath: string): RenderResult {
  return render(loadSpec(specPath));
}
