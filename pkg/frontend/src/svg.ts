/** Minimal hand-written SVG assembly: fixed layout, no external renderer. */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 40, right: 20, bottom: 50, left: 60 };

export interface Scale {
  (v: number): number;
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Deterministic coordinate formatting (shortest round-trip, then trimmed). */
export function fmt(v: number): string {
  return Number(v.toFixed(3)).toString();
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number,
                     stroke = "#333", width = 1): string {
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
    `stroke="${stroke}" stroke-width="${width}"/>`;
}

export function polyline(points: Array<[number, number]>, stroke: string): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`;
}

export function text(x: number, y: number, s: string, opts: {
  anchor?: string; size?: number; rotate?: boolean;
} = {}): string {
  const anchor = opts.anchor ?? "middle";
  const size = opts.size ?? 12;
  const transform = opts.rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
  return `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
    `font-family="sans-serif" font-size="${size}"${transform}>${esc(s)}</text>`;
}

export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

/** Evenly spaced tick values across [lo, hi]. */
export function ticks(lo: number, hi: number, n = 6): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) out.push(lo + ((hi - lo) * i) / (n - 1));
  return out;
}

export interface Frame {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function plotFrame(): Frame {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

export function axes(frame: Frame, title: string, xlabel: string,
                     ylabel: string): string[] {
  const parts = [
    line(frame.x0, frame.y0, frame.x1, frame.y0),
    line(frame.x0, frame.y0, frame.x0, frame.y1),
  ];
  if (title) parts.push(text((frame.x0 + frame.x1) / 2, MARGIN.top - 16, title, { size: 14 }));
  if (xlabel) parts.push(text((frame.x0 + frame.x1) / 2, HEIGHT - 10, xlabel));
  if (ylabel) parts.push(text(16, (frame.y0 + frame.y1) / 2, ylabel, { rotate: true }));
  return parts;
}

export function document(body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    rect(0, 0, WIDTH, HEIGHT, "#ffffff"),
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
