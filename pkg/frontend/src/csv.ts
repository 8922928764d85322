import { readFileSync } from "node:fs";

import Papa from "papaparse";

import { emptyInputError, schemaError } from "./errors.js";

export type ColumnKind = "int" | "float" | "str";

export interface ColumnSpec {
  name: string;
  kind: ColumnKind;
}

export interface SchemaManifest {
  artifact_version: number;
  schemas: Record<string, { version: number; columns: ColumnSpec[] }>;
}

export type Cell = number | string;
export type Row = Record<string, Cell>;

export function loadManifest(path: string): SchemaManifest {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw schemaError(`cannot read schema manifest ${path}: ${err}`);
  }
  const m = doc as SchemaManifest;
  if (typeof m !== "object" || m === null || typeof m.schemas !== "object") {
    throw schemaError(`schema manifest ${path} has no "schemas" object`);
  }
  return m;
}

function parseNumber(raw: string, kind: ColumnKind, where: string): number {
  // The producer serializes floats with repr(), so special values arrive
  // as "nan" / "inf" / "-inf".
  if (kind === "float") {
    if (raw === "nan") return NaN;
    if (raw === "inf") return Infinity;
    if (raw === "-inf") return -Infinity;
  }
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) {
    throw schemaError(`${where}: cannot parse ${JSON.stringify(raw)} as ${kind}`);
  }
  if (kind === "int" && !Number.isInteger(value)) {
    throw schemaError(`${where}: expected integer, got ${JSON.stringify(raw)}`);
  }
  return value;
}

/** Read a CSV file and type its cells against one schema of the manifest. */
export function readCsv(
  path: string,
  schemaName: string,
  manifest: SchemaManifest,
): Row[] {
  const schema = manifest.schemas[schemaName];
  if (schema === undefined) {
    throw schemaError(`unknown schema "${schemaName}" in manifest`);
  }
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trimEnd(), { delimiter: "," });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw schemaError(`${path}: ${e.message} (row ${e.row})`);
  }
  const lines = parsed.data;
  if (lines.length === 0 || (lines.length === 1 && lines[0]!.length <= 1)) {
    throw emptyInputError(`${path}: no header`);
  }
  const header = lines[0]!;
  const expected = schema.columns.map((c) => c.name);
  if (header.length !== expected.length ||
      header.some((h, i) => h !== expected[i])) {
    throw schemaError(
      `${path}: header [${header.join(",")}] does not match schema ` +
      `"${schemaName}" [${expected.join(",")}]`,
    );
  }
  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!;
    if (cells.length === 1 && cells[0] === "") continue;
    if (cells.length !== expected.length) {
      throw schemaError(`${path} line ${i + 1}: expected ${expected.length} ` +
        `fields, got ${cells.length}`);
    }
    const row: Row = {};
    for (let j = 0; j < schema.columns.length; j++) {
      const col = schema.columns[j]!;
      const raw = cells[j]!;
      row[col.name] = col.kind === "str"
        ? raw
        : parseNumber(raw, col.kind, `${path} line ${i + 1} column ${col.name}`);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw emptyInputError(`${path}: no data rows`);
  }
  return rows;
}

/** Numeric values of one column, keeping row order. */
export function numericColumn(rows: Row[], column: string, where: string): number[] {
  return rows.map((r, i) => {
    const v = r[column];
    if (typeof v !== "number") {
      throw schemaError(`${where}: column "${column}" is not numeric (row ${i + 1})`);
    }
    return v;
  });
}
