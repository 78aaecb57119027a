/**
 * Readers for the fixed-name files a run directory contains.
 *
 * Every reader works from the documented column layouts alone; nothing in
 * here imports or shells out to the simulation package. observables.csv
 * comes in three shapes (closed run, trajectory ensemble with stderr
 * columns, disorder sweep) and bands.csv in two (phase grid, momentum
 * grid); the readers sniff the header and tag the result.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import Papa from "papaparse";

export interface Manifest {
  experiment: string;
  params: Record<string, unknown>;
  seed: number;
  status: string;
  outputs: string[];
  [key: string]: unknown;
}

export function readManifest(runDir: string): Manifest {
  const raw = JSON.parse(readFileSync(join(runDir, "manifest.json"), "utf8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("manifest.json: not a JSON object");
  }
  if (typeof raw.experiment !== "string") {
    throw new Error("manifest.json: missing experiment name");
  }
  if (typeof raw.params !== "object" || raw.params === null) {
    throw new Error("manifest.json: missing params table");
  }
  return raw as Manifest;
}

function parseCsv(path: string): Record<string, number>[] {
  const text = readFileSync(path, "utf8");
  const out = Papa.parse<Record<string, number>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (out.errors.length > 0) {
    const e = out.errors[0];
    throw new Error(`${path}: ${e.message} (row ${e.row})`);
  }
  if (out.data.length === 0) throw new Error(`${path}: no data rows`);
  return out.data;
}

function column(rows: Record<string, number>[], key: string): number[] {
  return rows.map((r) => {
    const v = r[key];
    if (typeof v !== "number" || Number.isNaN(v)) {
      throw new Error(`column ${key}: non-numeric value ${v}`);
    }
    return v;
  });
}

export interface SeriesTable {
  t: number[];
  norm: number[];
  totalN: number[];
  com: number[];
  density: number[][]; // [time][site]
  totalNStderr?: number[];
  comStderr?: number[];
}

export interface NoiseTable {
  eta: number[];
  meanDev: number[];
  stderr: number[];
}

export type Observables =
  | { kind: "series"; series: SeriesTable }
  | { kind: "noise"; noise: NoiseTable };

export function readObservables(path: string): Observables {
  const rows = parseCsv(path);
  const keys = Object.keys(rows[0]);
  if (keys[0] === "eta") {
    return {
      kind: "noise",
      noise: {
        eta: column(rows, "eta"),
        meanDev: column(rows, "mean_dev"),
        stderr: column(rows, "stderr"),
      },
    };
  }
  if (keys[0] !== "t") throw new Error(`${path}: unrecognized header ${keys[0]},...`);
  // n_10 must sort after n_9, so order by the numeric suffix
  const siteKeys = keys
    .filter((k) => /^n_\d+$/.test(k))
    .sort((a, b) => Number(a.slice(2)) - Number(b.slice(2)));
  if (siteKeys.length === 0) throw new Error(`${path}: no site density columns`);
  const siteCols = siteKeys.map((k) => column(rows, k));
  const series: SeriesTable = {
    t: column(rows, "t"),
    norm: column(rows, "norm"),
    totalN: column(rows, "total_n"),
    com: column(rows, "com"),
    density: rows.map((_, i) => siteCols.map((c) => c[i])),
  };
  if (keys.includes("total_n_stderr")) {
    series.totalNStderr = column(rows, "total_n_stderr");
    series.comStderr = column(rows, "com_stderr");
  }
  return { kind: "series", series };
}

export type Bands =
  | {
      kind: "phi";
      phi: number[];
      low: number[];
      mid: number[];
      high: number[];
      gapLowMid: number[];
      gapMidHigh: number[];
    }
  | { kind: "k"; k: number[]; a: number[]; b: number[]; c: number[] };

export function readBands(path: string): Bands {
  const rows = parseCsv(path);
  const keys = Object.keys(rows[0]);
  if (keys[0] === "phi") {
    return {
      kind: "phi",
      phi: column(rows, "phi"),
      low: column(rows, "E_low"),
      mid: column(rows, "E_mid"),
      high: column(rows, "E_high"),
      gapLowMid: column(rows, "gap_low_mid"),
      gapMidHigh: column(rows, "gap_mid_high"),
    };
  }
  if (keys[0] === "k") {
    return {
      kind: "k",
      k: column(rows, "k"),
      a: column(rows, "E_A"),
      b: column(rows, "E_B"),
      c: column(rows, "E_C"),
    };
  }
  throw new Error(`${path}: unrecognized header ${keys.join(",")}`);
}

export interface TuningTable {
  phiG: number[];
  omega: number[];
  j: number[];
  u: number[];
}

export function readTuning(path: string): TuningTable {
  const rows = parseCsv(path);
  return {
    phiG: column(rows, "phi_g"),
    omega: column(rows, "omega"),
    j: column(rows, "J"),
    u: column(rows, "U"),
  };
}

export function readWindings(path: string): Record<string, number> {
  const raw = JSON.parse(readFileSync(path, "utf8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("windings.json: not a JSON object");
  }
  return raw as Record<string, number>;
}
