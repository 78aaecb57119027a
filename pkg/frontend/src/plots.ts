/**
 * The figure builders: site-density heatmap, center-of-mass trace,
 * ensemble photon-number decay, parameter-space pump loop, band diagram,
 * disorder-robustness curve, and flux-tuning curves. Each takes parsed
 * tables plus a few labels and returns a complete SVG document.
 */

import { interpolateViridis } from "d3-scale-chromatic";
import type { Bands, NoiseTable, SeriesTable, TuningTable } from "./schemas.js";
import {
  el,
  fmt,
  legend,
  makeFrame,
  niceTicks,
  polygon,
  polyline,
  svgDoc,
  text,
  titleText,
  xAxis,
  xScale,
  yAxis,
  yScale,
  type Tick,
} from "./svg.js";

const BLUE = "#1f77b4";
const ORANGE = "#ff7f0e";
const GREEN = "#2ca02c";
const RED = "#d62728";
const GREY = "#888888";

export interface TimeAxis {
  /** Pump period; when set, time is plotted in units of T_p. */
  period?: number;
  title: string;
}

function timeValues(t: number[], period?: number): { values: number[]; label: string } {
  if (period && period > 0) {
    return { values: t.map((x) => x / period), label: "t / T_p" };
  }
  return { values: t, label: "t (1/J)" };
}

/** Vertical guides at integer multiples of the pump period. */
function cycleGuides(
  tv: number[],
  scale: (v: number) => number,
  top: number,
  bottom: number,
): string {
  const parts: string[] = [];
  const last = tv[tv.length - 1];
  for (let c = 1; c <= Math.floor(last + 1e-9); c++) {
    const x = scale(c);
    parts.push(
      el("line", {
        x1: x,
        y1: top,
        x2: x,
        y2: bottom,
        stroke: "#cccccc",
        "stroke-dasharray": "4 3",
      }),
    );
  }
  return parts.join("");
}

export function heatmapPlot(series: SeriesTable, axis: TimeAxis): string {
  const f = makeFrame(760, 440, { top: 34, right: 86, bottom: 44, left: 58 });
  const { values: tv, label } = timeValues(series.t, axis.period);
  const nT = tv.length;
  const nSites = series.density[0].length;
  const sx = xScale(f, tv[0], tv[nT - 1]);
  const sy = yScale(f, -0.5, nSites - 0.5);
  let vmax = 0;
  for (const row of series.density) for (const v of row) vmax = Math.max(vmax, v);
  if (vmax <= 0) vmax = 1;

  const cells: string[] = [];
  for (let i = 0; i < nT; i++) {
    // cell spans half the gap to each neighbouring sample
    const x0 = sx(i === 0 ? tv[0] : (tv[i - 1] + tv[i]) / 2);
    const x1 = sx(i === nT - 1 ? tv[nT - 1] : (tv[i] + tv[i + 1]) / 2);
    for (let m = 0; m < nSites; m++) {
      const v = series.density[i][m];
      if (v < 1e-4 * vmax) continue; // background stays the zero colour
      cells.push(
        el("rect", {
          x: x0,
          y: sy(m + 0.5),
          width: Math.max(x1 - x0, 0.1),
          height: sy(-0.5) - sy(0.5),
          fill: interpolateViridis(v / vmax),
        }),
      );
    }
  }

  // colourbar
  const bx = f.left + f.innerW + 16;
  const steps = 64;
  const bar: string[] = [];
  for (let i = 0; i < steps; i++) {
    const y1 = f.top + (f.innerH * (steps - 1 - i)) / steps;
    bar.push(
      el("rect", {
        x: bx,
        y: y1,
        width: 14,
        height: f.innerH / steps + 0.5,
        fill: interpolateViridis((i + 0.5) / steps),
      }),
    );
  }
  bar.push(text(bx + 18, f.top + f.innerH + 4, "0"));
  bar.push(text(bx + 18, f.top + 10, fmt(vmax)));
  bar.push(
    text(bx + 7, f.top - 8, "⟨n⟩", { "text-anchor": "middle" }),
  );

  const siteTicks: Tick[] = [];
  const step = nSites > 12 ? 5 : 1;
  for (let m = 0; m < nSites; m += step) siteTicks.push({ value: m, label: String(m) });

  const body =
    el(
      "rect",
      {
        x: f.left,
        y: f.top,
        width: f.innerW,
        height: f.innerH,
        fill: interpolateViridis(0),
      },
    ) +
    cells.join("") +
    cycleGuides(tv, sx, f.top, f.top + f.innerH) +
    xAxis(f, sx, label) +
    yAxis(f, sy, "site m", siteTicks) +
    bar.join("") +
    titleText(f, axis.title);
  return svgDoc(f.width, f.height, body);
}

export function comPlot(series: SeriesTable, axis: TimeAxis): string {
  const f = makeFrame(720, 440);
  const { values: tv, label } = timeValues(series.t, axis.period);
  const sx = xScale(f, tv[0], tv[tv.length - 1]);
  const err = series.comStderr;
  const lo = Math.min(...series.com.map((v, i) => v - (err ? err[i] : 0)));
  const hi = Math.max(...series.com.map((v, i) => v + (err ? err[i] : 0)));
  const pad = 0.05 * (hi - lo || 1);
  const sy = yScale(f, lo - pad, hi + pad);

  let band = "";
  if (err) {
    const upper: Array<[number, number]> = series.com.map((v, i) => [
      sx(tv[i]),
      sy(v + err[i]),
    ]);
    const lower: Array<[number, number]> = series.com.map((v, i) => [
      sx(tv[i]),
      sy(v - err[i]),
    ]);
    band = polygon([...upper, ...lower.reverse()], { fill: BLUE, opacity: 0.2 });
  }
  const line = polyline(
    series.com.map((v, i) => [sx(tv[i]), sy(v)]),
    { stroke: BLUE, "stroke-width": 1.6 },
  );
  const drift = series.com[series.com.length - 1] - series.com[0];
  const body =
    cycleGuides(tv, sx, f.top, f.top + f.innerH) +
    band +
    line +
    xAxis(f, sx, label) +
    yAxis(f, sy, "centre of mass (site)") +
    legend(f, [{ label: `net displacement ${fmt(drift)}`, color: BLUE }]) +
    titleText(f, axis.title);
  return svgDoc(f.width, f.height, body);
}

/** Least-squares fit of ln(n) = a - t/T1 ignoring non-positive samples. */
export function fitDecay(t: number[], n: number[]): { n0: number; t1: number } | null {
  const xs: number[] = [];
  const ys: number[] = [];
  for (let i = 0; i < t.length; i++) {
    if (n[i] > 0) {
      xs.push(t[i]);
      ys.push(Math.log(n[i]));
    }
  }
  if (xs.length < 2) return null;
  const mx = xs.reduce((a, b) => a + b, 0) / xs.length;
  const my = ys.reduce((a, b) => a + b, 0) / ys.length;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < xs.length; i++) {
    sxx += (xs[i] - mx) ** 2;
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx === 0 || sxy >= 0) return null; // not a decay
  const slope = sxy / sxx;
  return { n0: Math.exp(my - slope * mx), t1: -1 / slope };
}

export function decayPlot(series: SeriesTable, axis: TimeAxis): string {
  if (!series.totalNStderr) {
    throw new Error("decay plot needs ensemble stderr columns");
  }
  const f = makeFrame(720, 440);
  const { values: tv, label } = timeValues(series.t, axis.period);
  const sx = xScale(f, tv[0], tv[tv.length - 1]);
  const err = series.totalNStderr;
  const hi = Math.max(...series.totalN) * 1.05;
  const sy = yScale(f, 0, hi);

  const upper: Array<[number, number]> = series.totalN.map((v, i) => [
    sx(tv[i]),
    sy(v + 3 * err[i]),
  ]);
  const lower: Array<[number, number]> = series.totalN.map((v, i) => [
    sx(tv[i]),
    sy(v - 3 * err[i]),
  ]);
  const band = polygon([...upper, ...lower.reverse()], { fill: BLUE, opacity: 0.18 });
  const mean = polyline(
    series.totalN.map((v, i) => [sx(tv[i]), sy(v)]),
    { stroke: BLUE, "stroke-width": 1.6 },
  );

  const entries = [
    { label: "ensemble mean ± 3 s.e.", color: BLUE },
  ];
  let fitLine = "";
  const fit = fitDecay(series.t, series.totalN);
  if (fit) {
    const pts: Array<[number, number]> = series.t.map((time, i) => [
      sx(tv[i]),
      sy(fit.n0 * Math.exp(-time / fit.t1)),
    ]);
    fitLine = polyline(pts, { stroke: RED, "stroke-width": 1.2, "stroke-dasharray": "6 4" });
    entries.push({ label: `fit: ${fmt(fit.n0)} exp(-t/${fmt(fit.t1)})`, color: RED });
  }

  const body =
    cycleGuides(tv, sx, f.top, f.top + f.innerH) +
    band +
    mean +
    fitLine +
    xAxis(f, sx, label) +
    yAxis(f, sy, "total photon number") +
    legend(f, entries, f.left + f.innerW - 230) +
    titleText(f, axis.title);
  return svgDoc(f.width, f.height, body);
}

export type LoopShape =
  | { kind: "circle"; delta: number; phi0: number }
  | { kind: "square"; delta: number };

/**
 * Pump path in the (omega_A - omega_B, omega_A - omega_C) detuning plane.
 * The phase sweep encircles the triple degeneracy at the origin; the
 * trivial square stays inside the positive quadrant.
 */
export function loopPoints(shape: LoopShape): Array<[number, number]> {
  if (shape.kind === "circle") {
    const n = 241;
    const pts: Array<[number, number]> = [];
    const r3 = Math.sqrt(3) * shape.delta;
    for (let i = 0; i < n; i++) {
      const phi = shape.phi0 + (2 * Math.PI * i) / (n - 1);
      pts.push([r3 * Math.sin(phi + Math.PI / 3), r3 * Math.sin(phi + (2 * Math.PI) / 3)]);
    }
    return pts;
  }
  const d = shape.delta;
  return [
    [d / 2, d / 2],
    [(3 * d) / 2, d / 2],
    [(3 * d) / 2, (3 * d) / 2],
    [d / 2, (3 * d) / 2],
    [d / 2, d / 2],
  ];
}

export function loopPlot(shape: LoopShape, title: string, winding?: number): string {
  const f = makeFrame(480, 480, { top: 34, right: 18, bottom: 44, left: 58 });
  const pts = loopPoints(shape);
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const lo = Math.min(0, ...xs, ...ys);
  const hi = Math.max(0, ...xs, ...ys);
  const pad = 0.12 * (hi - lo || 1);
  const sx = xScale(f, lo - pad, hi + pad);
  const sy = yScale(f, lo - pad, hi + pad);

  const path = polyline(
    pts.map(([x, y]) => [sx(x), sy(y)]),
    { stroke: BLUE, "stroke-width": 1.8 },
  );
  const start = el("circle", { cx: sx(pts[0][0]), cy: sy(pts[0][1]), r: 4, fill: BLUE });
  // degeneracy point the winding is counted around
  const origin =
    el("line", {
      x1: sx(0) - 5,
      y1: sy(0) - 5,
      x2: sx(0) + 5,
      y2: sy(0) + 5,
      stroke: RED,
      "stroke-width": 1.6,
    }) +
    el("line", {
      x1: sx(0) - 5,
      y1: sy(0) + 5,
      x2: sx(0) + 5,
      y2: sy(0) - 5,
      stroke: RED,
      "stroke-width": 1.6,
    });
  const note =
    winding === undefined
      ? ""
      : text(f.left + 10, f.top + 16, `winding ${fmt(winding)}`);
  const body =
    path +
    start +
    origin +
    note +
    xAxis(f, sx, "ω_A − ω_B (J)") +
    yAxis(f, sy, "ω_A − ω_C (J)") +
    titleText(f, title);
  return svgDoc(f.width, f.height, body);
}

function halfPiLabel(k: number): string {
  if (k === 0) return "0";
  const sign = k < 0 ? "−" : "";
  const a = Math.abs(k);
  if (a % 2 === 0) {
    const m = a / 2;
    return `${sign}${m === 1 ? "" : m}π`;
  }
  return `${sign}${a}π/2`;
}

/** Ticks every pi/2 across [lo, hi]. */
function piTicks(lo: number, hi: number): Tick[] {
  const ticks: Tick[] = [];
  const step = Math.PI / 2;
  for (let k = Math.ceil(lo / step - 1e-9); k * step <= hi + 1e-9; k++) {
    ticks.push({ value: k * step, label: halfPiLabel(k) });
  }
  return ticks;
}

function argMin(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) if (values[i] < values[best]) best = i;
  return best;
}

export function bandsPlot(bands: Bands, title: string): string {
  const f = makeFrame(720, 460);
  if (bands.kind === "phi") {
    const sx = xScale(f, bands.phi[0], bands.phi[bands.phi.length - 1]);
    const all = [...bands.low, ...bands.mid, ...bands.high];
    const lo = Math.min(...all);
    const hi = Math.max(...all);
    const pad = 0.06 * (hi - lo || 1);
    const sy = yScale(f, lo - pad, hi + pad);
    const curve = (ys: number[], color: string) =>
      polyline(ys.map((v, i) => [sx(bands.phi[i]), sy(v)]), {
        stroke: color,
        "stroke-width": 1.6,
      });

    // mark the tracked anticrossing minima of both gaps
    const marks: string[] = [];
    for (const [gap, a, b] of [
      [bands.gapLowMid, bands.low, bands.mid],
      [bands.gapMidHigh, bands.mid, bands.high],
    ] as Array<[number[], number[], number[]]>) {
      const i = argMin(gap);
      const x = sx(bands.phi[i]);
      marks.push(
        el("line", {
          x1: x,
          y1: sy(a[i]),
          x2: x,
          y2: sy(b[i]),
          stroke: RED,
          "stroke-width": 1.4,
        }),
      );
      marks.push(
        text(x + 6, (sy(a[i]) + sy(b[i])) / 2 + 4, `gap ${fmt(gap[i])}`, { fill: RED }),
      );
    }

    const body =
      curve(bands.low, BLUE) +
      curve(bands.mid, ORANGE) +
      curve(bands.high, GREEN) +
      marks.join("") +
      xAxis(f, sx, "φ", piTicks(bands.phi[0], bands.phi[bands.phi.length - 1])) +
      yAxis(f, sy, "E (J)") +
      legend(f, [
        { label: "lower band", color: BLUE },
        { label: "middle band", color: ORANGE },
        { label: "upper band", color: GREEN },
      ]) +
      titleText(f, title);
    return svgDoc(f.width, f.height, body);
  }

  const sx = xScale(f, bands.k[0], bands.k[bands.k.length - 1]);
  const all = [...bands.a, ...bands.b, ...bands.c];
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const pad = 0.06 * (hi - lo || 1);
  const sy = yScale(f, lo - pad, hi + pad);
  const curve = (ys: number[], color: string) =>
    polyline(ys.map((v, i) => [sx(bands.k[i]), sy(v)]), {
      stroke: color,
      "stroke-width": 1.6,
    });
  const body =
    curve(bands.a, BLUE) +
    curve(bands.b, ORANGE) +
    curve(bands.c, GREEN) +
    xAxis(f, sx, "k", piTicks(bands.k[0], bands.k[bands.k.length - 1])) +
    yAxis(f, sy, "E (J)") +
    legend(f, [
      { label: "sublattice A", color: BLUE },
      { label: "sublattice B", color: ORANGE },
      { label: "sublattice C", color: GREEN },
    ]) +
    titleText(f, title);
  return svgDoc(f.width, f.height, body);
}

export function noisePlot(noise: NoiseTable, title: string): string {
  const f = makeFrame(720, 440);
  const sx = xScale(f, 0, Math.max(...noise.eta) * 1.06 || 1);
  const hi = Math.max(...noise.meanDev.map((v, i) => v + noise.stderr[i]), 1);
  const sy = yScale(f, 0, hi * 1.08);

  const parts: string[] = [];
  parts.push(
    polyline(
      noise.eta.map((e, i) => [sx(e), sy(noise.meanDev[i])]),
      { stroke: BLUE, "stroke-width": 1.4 },
    ),
  );
  for (let i = 0; i < noise.eta.length; i++) {
    const x = sx(noise.eta[i]);
    parts.push(
      el("line", {
        x1: x,
        y1: sy(noise.meanDev[i] - noise.stderr[i]),
        x2: x,
        y2: sy(noise.meanDev[i] + noise.stderr[i]),
        stroke: BLUE,
      }),
    );
    parts.push(el("circle", { cx: x, cy: sy(noise.meanDev[i]), r: 3.5, fill: BLUE }));
  }
  // one-site deviation reference: transport loses its quantized step above it
  parts.push(
    el("line", {
      x1: f.left,
      y1: sy(1),
      x2: f.left + f.innerW,
      y2: sy(1),
      stroke: GREY,
      "stroke-dasharray": "6 4",
    }),
  );
  parts.push(text(f.left + f.innerW - 4, sy(1) - 6, "1 site", {
    "text-anchor": "end",
    fill: GREY,
  }));

  const body =
    parts.join("") +
    xAxis(f, sx, "noise amplitude η (J)") +
    yAxis(f, sy, "mean transport deviation (sites)") +
    titleText(f, title);
  return svgDoc(f.width, f.height, body);
}

export function tuningPlot(tuning: TuningTable, title: string): string {
  const width = 720;
  const height = 560;
  const fTop = makeFrame(width, 290, { top: 34, right: 18, bottom: 40, left: 70 });
  const phi0 = 2.067833848e-15; // flux quantum h/2e in Wb
  const xs = tuning.phiG.map((p) => p / phi0);
  const sxTop = xScale(fTop, xs[0], xs[xs.length - 1] || 1);
  const ghz = tuning.omega.map((w) => w / 1e9);
  const loW = Math.min(...ghz);
  const hiW = Math.max(...ghz);
  const padW = 0.08 * (hiW - loW || 1);
  const syTop = yScale(fTop, loW - padW, hiW + padW);

  const top =
    polyline(ghz.map((v, i) => [sxTop(xs[i]), syTop(v)]), {
      stroke: BLUE,
      "stroke-width": 1.6,
    }) +
    xAxis(fTop, sxTop, "") +
    yAxis(fTop, syTop, "ω (GHz)") +
    titleText(fTop, title);

  // lower panel: J and U stay flat while omega sweeps
  const fBot = makeFrame(width, 250, { top: 16, right: 18, bottom: 44, left: 70 });
  const shift = height - 250;
  const mhzJ = tuning.j.map((v) => v / 1e6);
  const mhzU = tuning.u.map((v) => v / 1e6);
  const allB = [...mhzJ, ...mhzU];
  const loB = Math.min(...allB);
  const hiB = Math.max(...allB);
  const padB = Math.max(0.15 * (hiB - loB), 1);
  const sxBot = xScale(fBot, xs[0], xs[xs.length - 1] || 1);
  const syBot = yScale(fBot, loB - padB, hiB + padB);
  const bottom = el(
    "g",
    { transform: `translate(0 ${shift})` },
    polyline(mhzJ.map((v, i) => [sxBot(xs[i]), syBot(v)]), {
      stroke: ORANGE,
      "stroke-width": 1.6,
    }) +
      polyline(mhzU.map((v, i) => [sxBot(xs[i]), syBot(v)]), {
        stroke: GREEN,
        "stroke-width": 1.6,
        "stroke-dasharray": "6 4",
      }) +
      xAxis(fBot, sxBot, "flux bias Φ_g / Φ_0") +
      yAxis(fBot, syBot, "J, U (MHz)") +
      legend(fBot, [
        { label: "J", color: ORANGE },
        { label: "U", color: GREEN, dash: "6 4" },
      ]),
  );

  return svgDoc(width, height, top + bottom);
}
