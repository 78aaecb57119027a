/**
 * Turns one run directory into figure files.
 *
 * The plot list is planned from the manifest's experiment name; unknown
 * names fall back to sniffing which data files exist. A plot whose source
 * file is missing or malformed is skipped with a message instead of
 * aborting the rest. Run directories are only ever read; images land in a
 * separate output directory, and pointing that inside the run directory
 * is rejected outright.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { basename, join, resolve, sep } from "node:path";
import {
  bandsPlot,
  comPlot,
  decayPlot,
  heatmapPlot,
  loopPlot,
  noisePlot,
  tuningPlot,
  type LoopShape,
} from "./plots.js";
import { rasterize } from "./png.js";
import {
  readBands,
  readManifest,
  readObservables,
  readTuning,
  readWindings,
  type Manifest,
} from "./schemas.js";

export interface PlanItem {
  name: string;
  source: string;
  build: () => string;
}

function asNumber(v: unknown): number | undefined {
  return typeof v === "number" && Number.isFinite(v) ? v : undefined;
}

/** Pump period 2 pi / omega, with the drive rate the lossy experiment pins. */
function pumpPeriod(manifest: Manifest): number | undefined {
  const omega =
    asNumber(manifest.params.omega) ??
    (manifest.experiment === "fig5" ? 0.05 : undefined);
  return omega ? (2 * Math.PI) / Math.abs(omega) : undefined;
}

function seriesItems(runDir: string, manifest: Manifest, withDecay: boolean): PlanItem[] {
  const source = join(runDir, "observables.csv");
  const period = pumpPeriod(manifest);
  const label = `${manifest.experiment} (seed ${manifest.seed})`;
  const loadSeries = () => {
    const obs = readObservables(source);
    if (obs.kind !== "series") {
      throw new Error("observables.csv holds a disorder table, not a time series");
    }
    return obs.series;
  };
  const items: PlanItem[] = [
    {
      name: "heatmap",
      source,
      build: () => heatmapPlot(loadSeries(), { period, title: `site density, ${label}` }),
    },
    {
      name: "com",
      source,
      build: () => comPlot(loadSeries(), { period, title: `centre of mass, ${label}` }),
    },
  ];
  if (withDecay) {
    items.push({
      name: "decay",
      source,
      build: () => decayPlot(loadSeries(), { period, title: `photon loss, ${label}` }),
    });
  }
  return items;
}

function loopItem(runDir: string, manifest: Manifest, square: boolean): PlanItem {
  return {
    name: "loop",
    source: join(runDir, "manifest.json"),
    build: () => {
      const delta = asNumber(manifest.params.delta);
      if (delta === undefined) throw new Error("params.delta missing from manifest");
      const shape: LoopShape = square
        ? { kind: "square", delta }
        : { kind: "circle", delta, phi0: asNumber(manifest.params.phi0) ?? 0 };
      let winding: number | undefined;
      const wpath = join(runDir, "windings.json");
      if (existsSync(wpath)) {
        winding = readWindings(wpath)[square ? "square_loop" : "phase_sweep"];
      }
      const title = square
        ? `trivial detuning loop, ${manifest.experiment}`
        : `pump loop, ${manifest.experiment}`;
      return loopPlot(shape, title, winding);
    },
  };
}

function bandsItem(runDir: string, manifest: Manifest): PlanItem {
  const source = join(runDir, "bands.csv");
  return {
    name: "bands",
    source,
    build: () => bandsPlot(readBands(source), `band structure, ${manifest.experiment}`),
  };
}

export function plan(runDir: string, manifest: Manifest): PlanItem[] {
  switch (manifest.experiment) {
    case "fig2a":
    case "fig2c":
      return [...seriesItems(runDir, manifest, false), loopItem(runDir, manifest, false)];
    case "fig4a":
      return [...seriesItems(runDir, manifest, false), loopItem(runDir, manifest, true)];
    case "fig4b":
      return [
        {
          name: "noise",
          source: join(runDir, "observables.csv"),
          build: () => {
            const obs = readObservables(join(runDir, "observables.csv"));
            if (obs.kind !== "noise") {
              throw new Error("observables.csv is not a disorder table");
            }
            return noisePlot(obs.noise, "transport deviation vs noise amplitude");
          },
        },
      ];
    case "fig5":
      return seriesItems(runDir, manifest, true);
    case "bands":
    case "meanfield":
      return [bandsItem(runDir, manifest)];
    case "circuit":
      return [
        {
          name: "tuning",
          source: join(runDir, "tuning.csv"),
          build: () =>
            tuningPlot(readTuning(join(runDir, "tuning.csv")), "flux tuning curves"),
        },
      ];
    default: {
      // unknown experiment: render whatever recognizable files are present
      const items: PlanItem[] = [];
      if (existsSync(join(runDir, "observables.csv"))) {
        const obs = readObservables(join(runDir, "observables.csv"));
        if (obs.kind === "series") {
          items.push(
            ...seriesItems(runDir, manifest, obs.series.totalNStderr !== undefined),
          );
        } else {
          items.push({
            name: "noise",
            source: join(runDir, "observables.csv"),
            build: () => noisePlot(obs.noise, "transport deviation vs noise amplitude"),
          });
        }
      }
      if (existsSync(join(runDir, "bands.csv"))) items.push(bandsItem(runDir, manifest));
      if (existsSync(join(runDir, "tuning.csv"))) {
        items.push({
          name: "tuning",
          source: join(runDir, "tuning.csv"),
          build: () =>
            tuningPlot(readTuning(join(runDir, "tuning.csv")), "flux tuning curves"),
        });
      }
      return items;
    }
  }
}

export interface RenderOptions {
  format?: "svg" | "png";
  dpi?: number;
  outDir?: string;
}

export interface RenderResult {
  written: string[];
  skipped: Array<{ name: string; reason: string }>;
}

export async function render(
  runDir: string,
  options: RenderOptions = {},
): Promise<RenderResult> {
  const format = options.format ?? "svg";
  const dpi = options.dpi ?? 144;
  if (!existsSync(join(runDir, "manifest.json"))) {
    return { written: [], skipped: [{ name: "all", reason: "no manifest.json" }] };
  }
  const manifest = readManifest(runDir);
  const outDir =
    options.outDir ?? join("figures", `${manifest.experiment}-${basename(resolve(runDir))}`);
  const absRun = resolve(runDir) + sep;
  if ((resolve(outDir) + sep).startsWith(absRun)) {
    throw new Error(`output directory ${outDir} is inside the run directory`);
  }

  const result: RenderResult = { written: [], skipped: [] };
  let made = false;
  for (const item of plan(runDir, manifest)) {
    if (!existsSync(item.source)) {
      result.skipped.push({ name: item.name, reason: `missing ${basename(item.source)}` });
      continue;
    }
    let svg: string;
    try {
      svg = item.build();
    } catch (err) {
      result.skipped.push({ name: item.name, reason: String(err) });
      continue;
    }
    if (!made) {
      mkdirSync(outDir, { recursive: true });
      made = true;
    }
    const target = join(outDir, `${item.name}.${format}`);
    if (format === "svg") {
      writeFileSync(target, svg);
    } else {
      writeFileSync(target, await rasterize(svg, dpi));
    }
    result.written.push(target);
  }
  return result;
}
