import { numericColumn, Row } from "./csv.js";
import { emptyInputError, schemaError, usageError } from "./errors.js";
import { FigureSpec } from "./spec.js";
import { boxStats, histogram, mean } from "./stats.js";
import * as svg from "./svg.js";

export interface Figure {
  /** Every plotted aggregate, restated so tests never diff pixels. */
  sidecar: Record<string, unknown>;
  svg: string;
}

type Renderer = (spec: FigureSpec, rows: Row[]) => Figure;

export const renderers: Record<FigureSpec["kind"], Renderer> = {
  histogram: renderHistogram,
  boxplot: renderBoxplot,
  timeseries: renderTimeseries,
  table: renderTable,
};

function requireField<T>(value: T | undefined, name: string, kind: string): T {
  if (value === undefined) {
    throw usageError(`figure kind "${kind}" requires the "${name}" field`);
  }
  return value;
}

/** Rows carrying usable metrics: status == "ok" when the column exists. */
function okRows(spec: FigureSpec, rows: Row[]): Row[] {
  if (!spec.okOnly || rows.length === 0 || !("status" in rows[0]!)) return rows;
  return rows.filter((r) => r["status"] === "ok");
}

function transformed(spec: FigureSpec, values: number[]): number[] {
  const out: number[] = [];
  for (const v of values) {
    const t = spec.transform === "log10" ? Math.log10(v) : v;
    if (Number.isFinite(t)) out.push(t);
  }
  return out;
}

function renderHistogram(spec: FigureSpec, rows: Row[]): Figure {
  const column = requireField(spec.column, "column", spec.kind);
  const kept = okRows(spec, rows);
  const used = transformed(spec, numericColumn(kept, column, spec.input));
  if (used.length === 0) {
    throw emptyInputError(`${spec.input}: no finite values in "${column}"`);
  }
  const { edges, counts } = histogram(used, spec.bins);
  const sidecar = {
    kind: spec.kind,
    input: spec.input,
    schema: spec.schema,
    column,
    transform: spec.transform,
    n_rows: rows.length,
    n_used: used.length,
    n_excluded: rows.length - used.length,
    bin_edges: edges,
    counts,
    min: Math.min(...used),
    max: Math.max(...used),
  };

  const frame = svg.plotFrame();
  const sx = svg.linearScale(edges[0]!, edges[edges.length - 1]!, frame.x0, frame.x1);
  const peak = Math.max(...counts, 1);
  const sy = svg.linearScale(0, peak, frame.y0, frame.y1);
  const body = svg.axes(frame, spec.title, spec.xlabel || column, spec.ylabel || "count");
  counts.forEach((c, i) => {
    if (c === 0) return;
    const x = sx(edges[i]!);
    const w = sx(edges[i + 1]!) - x;
    body.push(svg.rect(x, sy(c), Math.max(w - 1, 0.5), frame.y0 - sy(c), "#4878b0"));
  });
  for (const t of svg.ticks(edges[0]!, edges[edges.length - 1]!)) {
    body.push(svg.line(sx(t), frame.y0, sx(t), frame.y0 + 4));
    body.push(svg.text(sx(t), frame.y0 + 18, svg.tickLabel(t)));
  }
  for (const t of svg.ticks(0, peak, 5)) {
    body.push(svg.line(frame.x0 - 4, sy(t), frame.x0, sy(t)));
    body.push(svg.text(frame.x0 - 8, sy(t) + 4, svg.tickLabel(t), { anchor: "end" }));
  }
  return { sidecar, svg: svg.document(body) };
}

function renderBoxplot(spec: FigureSpec, rows: Row[]): Figure {
  const column = requireField(spec.column, "column", spec.kind);
  const groupBy = requireField(spec.groupBy, "groupBy", spec.kind);
  const kept = okRows(spec, rows);
  const byKey = new Map<string, number[]>();
  const order: string[] = [];
  for (const row of kept) {
    const key = String(row[groupBy]);
    const v = row[column];
    if (typeof v !== "number") {
      throw schemaError(`${spec.input}: column "${column}" is not numeric`);
    }
    const t = spec.transform === "log10" ? Math.log10(v) : v;
    if (!Number.isFinite(t)) continue;
    if (!byKey.has(key)) {
      byKey.set(key, []);
      order.push(key);
    }
    byKey.get(key)!.push(t);
  }
  if (order.length === 0) {
    throw emptyInputError(`${spec.input}: no finite values in "${column}"`);
  }
  const groups = order.map((key) => ({ key, ...boxStats(byKey.get(key)!) }));
  const sidecar = {
    kind: spec.kind,
    input: spec.input,
    schema: spec.schema,
    column,
    group_by: groupBy,
    transform: spec.transform,
    n_rows: rows.length,
    groups,
  };

  const frame = svg.plotFrame();
  const lo = Math.min(...groups.map((g) => g.min));
  const hi = Math.max(...groups.map((g) => g.max));
  const sy = svg.linearScale(lo, hi === lo ? lo + 1 : hi, frame.y0, frame.y1);
  const slot = (frame.x1 - frame.x0) / groups.length;
  const body = svg.axes(frame, spec.title, spec.xlabel || groupBy, spec.ylabel || column);
  groups.forEach((g, i) => {
    const cx = frame.x0 + slot * (i + 0.5);
    const half = Math.min(slot * 0.3, 28);
    body.push(svg.line(cx, sy(g.min), cx, sy(g.q25), "#666"));
    body.push(svg.line(cx, sy(g.q75), cx, sy(g.max), "#666"));
    body.push(svg.rect(cx - half, sy(g.q75), 2 * half, sy(g.q25) - sy(g.q75), "#9ecae1"));
    body.push(svg.line(cx - half, sy(g.median), cx + half, sy(g.median), "#08306b", 2));
    body.push(svg.text(cx, frame.y0 + 18, g.key));
  });
  for (const t of svg.ticks(lo, hi)) {
    body.push(svg.line(frame.x0 - 4, sy(t), frame.x0, sy(t)));
    body.push(svg.text(frame.x0 - 8, sy(t) + 4, svg.tickLabel(t), { anchor: "end" }));
  }
  return { sidecar, svg: svg.document(body) };
}

const SERIES_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

function renderTimeseries(spec: FigureSpec, rows: Row[]): Figure {
  const xColumn = requireField(spec.x, "x", spec.kind);
  const yColumns = requireField(spec.y, "y", spec.kind);
  if (yColumns.length === 0) {
    throw usageError('timeseries needs at least one "y" column');
  }
  const xs = numericColumn(rows, xColumn, spec.input);
  const series = yColumns.map((name) => ({
    name,
    values: numericColumn(rows, name, spec.input),
  }));
  const sidecar = {
    kind: spec.kind,
    input: spec.input,
    schema: spec.schema,
    x: xColumn,
    n_rows: rows.length,
    x_values: xs,
    series,
    final: Object.fromEntries(
      series.map((s) => [s.name, s.values[s.values.length - 1]])),
    mean: Object.fromEntries(series.map((s) => [s.name, mean(s.values)])),
  };

  const frame = svg.plotFrame();
  const allY = series.flatMap((s) => s.values);
  const sx = svg.linearScale(Math.min(...xs), Math.max(...xs) || 1, frame.x0, frame.x1);
  const yLo = Math.min(...allY);
  const yHi = Math.max(...allY);
  const sy = svg.linearScale(yLo, yHi === yLo ? yLo + 1 : yHi, frame.y0, frame.y1);
  const body = svg.axes(frame, spec.title, spec.xlabel || xColumn, spec.ylabel);
  series.forEach((s, k) => {
    const color = SERIES_COLORS[k % SERIES_COLORS.length]!;
    body.push(svg.polyline(
      s.values.map((v, i) => [sx(xs[i]!), sy(v)] as [number, number]), color));
    body.push(svg.text(frame.x1 - 4, frame.y1 + 14 * (k + 1), s.name,
                       { anchor: "end" }));
  });
  for (const t of svg.ticks(Math.min(...xs), Math.max(...xs))) {
    body.push(svg.line(sx(t), frame.y0, sx(t), frame.y0 + 4));
    body.push(svg.text(sx(t), frame.y0 + 18, svg.tickLabel(t)));
  }
  for (const t of svg.ticks(yLo, yHi)) {
    body.push(svg.line(frame.x0 - 4, sy(t), frame.x0, sy(t)));
    body.push(svg.text(frame.x0 - 8, sy(t) + 4, svg.tickLabel(t), { anchor: "end" }));
  }
  return { sidecar, svg: svg.document(body) };
}

function renderTable(spec: FigureSpec, rows: Row[]): Figure {
  const columns = spec.columns ?? Object.keys(rows[0]!);
  for (const c of columns) {
    if (!(c in rows[0]!)) {
      throw schemaError(`${spec.input}: unknown table column "${c}"`);
    }
  }
  const cells = rows.map((r) => columns.map((c) => r[c]!));
  const sidecar = {
    kind: spec.kind,
    input: spec.input,
    schema: spec.schema,
    columns,
    n_rows: rows.length,
    rows: cells,
  };

  const rowH = 24;
  const colW = (svg.WIDTH - 40) / columns.length;
  const top = 60;
  const body: string[] = [];
  if (spec.title) body.push(svg.text(svg.WIDTH / 2, 30, spec.title, { size: 14 }));
  columns.forEach((c, j) => {
    body.push(svg.text(20 + colW * (j + 0.5), top, c, { size: 12 }));
  });
  body.push(svg.line(20, top + 8, svg.WIDTH - 20, top + 8));
  cells.forEach((row, i) => {
    const y = top + rowH * (i + 1);
    row.forEach((cell, j) => {
      const label = typeof cell === "number" ? svg.tickLabel(cell) : String(cell);
      body.push(svg.text(20 + colW * (j + 0.5), y, label));
    });
  });
  return { sidecar, svg: svg.document(body) };
}
