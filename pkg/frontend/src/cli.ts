#!/usr/bin/env node
import { parseArgs } from "node:util";

import { RenderError } from "./errors.js";
import { renderSpecFile } from "./render.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: { spec: { type: "string" } },
    });
  } catch (err) {
    process.stderr.write(`error category=usage: ${(err as Error).message}\n`);
    return 2;
  }
  const [command] = parsed.positionals;
  if (command !== "render" || parsed.positionals.length !== 1) {
    process.stderr.write("usage: render --spec <spec.json>\n");
    return 2;
  }
  const specPath = parsed.values.spec;
  if (specPath === undefined) {
    process.stderr.write("error category=usage: --spec is required\n");
    return 2;
  }
  try {
    const result = renderSpecFile(specPath);
    process.stdout.write(`wrote ${result.svgPath} and ${result.sidecarPath}\n`);
    return 0;
  } catch (err) {
    if (err instanceof RenderError) {
      process.stderr.write(`error category=${err.category}: ${err.message}\n`);
      return err.category === "usage" ? 2 : 1;
    }
    throw err;
  }
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url.endsWith(entry.split("/").pop()!)) {
  process.exit(main(process.argv.slice(2)));
}
