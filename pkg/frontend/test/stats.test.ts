import { describe, expect, it } from "vitest";

import { boxStats, histogram, mean, quantile } from "../src/stats.js";

describe("quantile", () => {
  it("interpolates linearly between order statistics", () => {
    expect(quantile([1, 2, 3, 4], 0.5)).toBeCloseTo(2.5, 12);
    expect(quantile([0, 10], 0.25)).toBeCloseTo(2.5, 12);
    expect(quantile([5], 0.75)).toBe(5);
  });

  it("hits the extremes at 0 and 1", () => {
    const v = [3, 1, 4, 1, 5].sort((a, b) => a - b);
    expect(quantile(v, 0)).toBe(1);
    expect(quantile(v, 1)).toBe(5);
  });
});

describe("boxStats", () => {
  it("matches a hand-computed example", () => {
    const s = boxStats([4, 1, 3, 2]);
    expect(s).toEqual({ n: 4, min: 1, q25: 1.75, median: 2.5, q75: 3.25, max: 4 });
  });
});

describe("histogram", () => {
  it("counts sum to the number of values", () => {
    const values = Array.from({ length: 137 }, (_, i) => Math.sin(i) * 10);
    const { counts } = histogram(values, 12);
    expect(counts.reduce((a, b) => a + b, 0)).toBe(137);
  });

  it("includes the maximum in the last bin", () => {
    const { counts, edges } = histogram([0, 1, 2, 3, 4], 4);
    expect(edges[0]).toBe(0);
    expect(edges[4]).toBe(4);
    expect(counts).toEqual([1, 1, 1, 2]);
  });

  it("widens a degenerate single-value range", () => {
    const { counts, edges } = histogram([7, 7, 7], 3);
    expect(counts.reduce((a, b) => a + b, 0)).toBe(3);
    expect(edges[0]).toBeLessThan(7);
    expect(edges[3]).toBeGreaterThan(7);
  });
});

describe("mean", () => {
  it("averages", () => {
    expect(mean([1, 2, 3, 4])).toBe(2.5);
  });
});
