/**
 * Minimal deterministic SVG chart scaffolding.
 *
 * Figures are assembled as plain strings so identical inputs always give
 * byte-identical files (no timestamps, no random ids, no layout engine).
 * Scales and tick placement come from d3-scale.
 */

import { scaleLinear, type ScaleLinear } from "d3-scale";

export const FONT = "DejaVu Sans, Helvetica, sans-serif";

/** Compact fixed-precision number: 6 significant digits, no trailing zeros. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0";
  const s = x.toPrecision(6);
  return s.includes(".") && !s.includes("e")
    ? s.replace(/\.?0+$/, "")
    : s;
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function el(
  name: string,
  attrs: Record<string, string | number>,
  children = "",
): string {
  const parts = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`)
    .join(" ");
  return children === ""
    ? `<${name} ${parts}/>`
    : `<${name} ${parts}>${children}</${name}>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string | number> = {},
): string {
  return el(
    "text",
    { x, y, "font-family": FONT, "font-size": 12, fill: "#222", ...attrs },
    esc(content),
  );
}

export interface Frame {
  width: number;
  height: number;
  left: number;
  top: number;
  innerW: number;
  innerH: number;
}

export function makeFrame(
  width: number,
  height: number,
  margin = { top: 34, right: 18, bottom: 44, left: 58 },
): Frame {
  return {
    width,
    height,
    left: margin.left,
    top: margin.top,
    innerW: width - margin.left - margin.right,
    innerH: height - margin.top - margin.bottom,
  };
}

export function xScale(f: Frame, lo: number, hi: number): ScaleLinear<number, number> {
  return scaleLinear([lo, hi], [f.left, f.left + f.innerW]);
}

export function yScale(f: Frame, lo: number, hi: number): ScaleLinear<number, number> {
  // SVG y grows downward; flip so larger values sit higher
  return scaleLinear([lo, hi], [f.top + f.innerH, f.top]);
}

export interface Tick {
  value: number;
  label: string;
}

export function niceTicks(scale: ScaleLinear<number, number>, count = 6): Tick[] {
  const format = scale.tickFormat(count);
  return scale.ticks(count).map((value) => ({ value, label: format(value) }));
}

export function xAxis(
  f: Frame,
  scale: ScaleLinear<number, number>,
  label: string,
  ticks?: Tick[],
): string {
  const y0 = f.top + f.innerH;
  const parts = [
    el("line", { x1: f.left, y1: y0, x2: f.left + f.innerW, y2: y0, stroke: "#222" }),
  ];
  for (const tk of ticks ?? niceTicks(scale)) {
    const x = scale(tk.value);
    parts.push(el("line", { x1: x, y1: y0, x2: x, y2: y0 + 5, stroke: "#222" }));
    parts.push(text(x, y0 + 18, tk.label, { "text-anchor": "middle" }));
  }
  parts.push(
    text(f.left + f.innerW / 2, y0 + 36, label, { "text-anchor": "middle" }),
  );
  return parts.join("");
}

export function yAxis(
  f: Frame,
  scale: ScaleLinear<number, number>,
  label: string,
  ticks?: Tick[],
): string {
  const parts = [
    el("line", { x1: f.left, y1: f.top, x2: f.left, y2: f.top + f.innerH, stroke: "#222" }),
  ];
  for (const tk of ticks ?? niceTicks(scale)) {
    const y = scale(tk.value);
    parts.push(el("line", { x1: f.left - 5, y1: y, x2: f.left, y2: y, stroke: "#222" }));
    parts.push(text(f.left - 8, y + 4, tk.label, { "text-anchor": "end" }));
  }
  const cx = f.left - 42;
  const cy = f.top + f.innerH / 2;
  parts.push(
    text(cx, cy, label, {
      "text-anchor": "middle",
      transform: `rotate(-90 ${fmt(cx)} ${fmt(cy)})`,
    }),
  );
  return parts.join("");
}

export function polyline(
  points: Array<[number, number]>,
  attrs: Record<string, string | number>,
): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return el("polyline", { points: pts, fill: "none", ...attrs });
}

/** Closed filled region, e.g. a stderr band around a curve. */
export function polygon(
  points: Array<[number, number]>,
  attrs: Record<string, string | number>,
): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return el("polygon", { points: pts, stroke: "none", ...attrs });
}

export function titleText(f: Frame, content: string): string {
  return text(f.left + f.innerW / 2, 18, content, {
    "text-anchor": "middle",
    "font-size": 14,
  });
}

export interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
}

export function legend(f: Frame, entries: LegendEntry[], x?: number, y?: number): string {
  const x0 = x ?? f.left + 10;
  let y0 = y ?? f.top + 10;
  const parts: string[] = [];
  for (const e of entries) {
    parts.push(
      el("line", {
        x1: x0,
        y1: y0,
        x2: x0 + 22,
        y2: y0,
        stroke: e.color,
        "stroke-width": 2,
        ...(e.dash ? { "stroke-dasharray": e.dash } : {}),
      }),
    );
    parts.push(text(x0 + 28, y0 + 4, e.label));
    y0 += 16;
  }
  return parts.join("");
}

export function svgDoc(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    el("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }) +
    body +
    "</svg>\n"
  );
}
