/** Quantile with linear interpolation between order statistics. */
export function quantile(sorted: number[], q: number): number {
  const n = sorted.length;
  if (n === 0) throw new Error("quantile of empty array");
  if (n === 1) return sorted[0]!;
  const pos = q * (n - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, n - 1);
  const frac = pos - lo;
  return sorted[lo]! + (sorted[hi]! - sorted[lo]!) * frac;
}

export interface BoxStats {
  n: number;
  min: number;
  q25: number;
  median: number;
  q75: number;
  max: number;
}

export function boxStats(values: number[]): BoxStats {
  const sorted = [...values].sort((a, b) => a - b);
  return {
    n: sorted.length,
    min: sorted[0]!,
    q25: quantile(sorted, 0.25),
    median: quantile(sorted, 0.5),
    q75: quantile(sorted, 0.75),
    max: sorted[sorted.length - 1]!,
  };
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

/**
 * Equal-width histogram over [min, max] of the data.  Bins are half-open
 * [e_i, e_{i+1}) except the last, which includes its right edge, so every
 * value lands in exactly one bin and the counts sum to values.length.
 */
export function histogram(values: number[], bins: number): Histogram {
  if (values.length === 0) throw new Error("histogram of empty array");
  if (bins < 1 || !Number.isInteger(bins)) throw new Error("bins must be a positive integer");
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const edges: number[] = [];
  for (let i = 0; i <= bins; i++) {
    edges.push(lo + ((hi - lo) * i) / bins);
  }
  // Assign by the published edges (not by width arithmetic) so the counts
  // are recomputable from the sidecar without floating-point ambiguity.
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    let k = upperBound(edges, v) - 1;
    if (k >= bins) k = bins - 1;
    if (k < 0) k = 0;
    counts[k]!++;
  }
  return { edges, counts };
}

/** Index of the first element strictly greater than v. */
function upperBound(sorted: number[], v: number): number {
  let lo = 0;
  let hi = sorted.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (sorted[mid]! <= v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

export function mean(values: number[]): number {
  let s = 0;
  for (const v of values) s += v;
  return s / values.length;
}
