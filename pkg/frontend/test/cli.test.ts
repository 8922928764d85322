import { existsSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { MANIFEST_PATH, stabilityCsv, tmpDir, writeSpec } from "./helpers.js";

describe("render CLI", () => {
  it("renders a valid spec and exits 0", () => {
    const dir = tmpDir();
    stabilityCsv(dir, [{ e_h: 1e-9 }, { e_h: 1e-8 }, { e_h: 1e-7 }]);
    const spec = writeSpec(dir, {
      kind: "histogram",
      input: "stability.csv",
      schema: "stability",
      manifest: MANIFEST_PATH,
      output: "out.svg",
      column: "e_h",
      transform: "log10",
      bins: 4,
    });
    expect(main(["render", "--spec", spec])).toBe(0);
    expect(existsSync(join(dir, "out.svg"))).toBe(true);
    expect(existsSync(join(dir, "out.stats.json"))).toBe(true);
  });

  it("exits 2 without a --spec argument", () => {
    expect(main(["render"])).toBe(2);
  });

  it("exits 2 on an unknown command", () => {
    expect(main(["paint", "--spec", "x.json"])).toBe(2);
  });

  it("exits 2 on a structurally invalid spec", () => {
    const dir = tmpDir();
    const spec = writeSpec(dir, { kind: "sculpture" });
    expect(main(["render", "--spec", spec])).toBe(2);
  });

  it("exits 1 on an empty input and writes nothing", () => {
    const dir = tmpDir();
    stabilityCsv(dir, []);
    const spec = writeSpec(dir, {
      kind: "histogram",
      input: "stability.csv",
      schema: "stability",
      manifest: MANIFEST_PATH,
      output: "out.svg",
      column: "e_h",
    });
    expect(main(["render", "--spec", spec])).toBe(1);
    expect(existsSync(join(dir, "out.svg"))).toBe(false);
  });
});
