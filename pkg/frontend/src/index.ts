export { loadManifest, readCsv } from "./csv.js";
export { RenderError } from "./errors.js";
export { renderers } from "./figures.js";
export { loadSpec, render, renderSpecFile, serializeSidecar, sidecarPathFor } from "./render.js";
export { figureSpecSchema, type FigureSpec } from "./spec.js";
export { boxStats, histogram, mean, quantile } from "./stats.js";
