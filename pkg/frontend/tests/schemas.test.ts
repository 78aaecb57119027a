import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import {
  readBands,
  readManifest,
  readObservables,
  readTuning,
  readWindings,
} from "../src/schemas.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

function tempCsv(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "figtest-"));
  const path = join(dir, "data.csv");
  writeFileSync(path, content);
  return path;
}

describe("readObservables", () => {
  it("parses a closed-run series", () => {
    const obs = readObservables(join(FIXTURES, "fig2a", "observables.csv"));
    expect(obs.kind).toBe("series");
    if (obs.kind !== "series") return;
    expect(obs.series.t[0]).toBe(0);
    expect(obs.series.density[0]).toHaveLength(6);
    expect(obs.series.totalNStderr).toBeUndefined();
    // photon starts on site 3
    expect(obs.series.density[0][3]).toBe(1);
  });

  it("parses an ensemble series with stderr columns", () => {
    const obs = readObservables(join(FIXTURES, "fig5", "observables.csv"));
    expect(obs.kind).toBe("series");
    if (obs.kind !== "series") return;
    expect(obs.series.totalNStderr).toBeDefined();
    expect(obs.series.comStderr).toHaveLength(obs.series.t.length);
    expect(obs.series.density[0]).toHaveLength(9);
  });

  it("orders site columns numerically past n_9", () => {
    const header = "t,norm,total_n,com," + [...Array(12).keys()].map((m) => `n_${m}`).join(",");
    const row = "0,1,1,11," + [...Array(11).fill(0), 1].join(",");
    const obs = readObservables(tempCsv(`${header}\n${row}\n`));
    if (obs.kind !== "series") throw new Error("expected series");
    expect(obs.series.density[0][11]).toBe(1);
    expect(obs.series.density[0][2]).toBe(0);
  });

  it("parses a disorder table", () => {
    const obs = readObservables(tempCsv("eta,mean_dev,stderr,n_realizations\n0,0,0,1\n0.5,0.2,0.05,10\n"));
    expect(obs.kind).toBe("noise");
    if (obs.kind !== "noise") return;
    expect(obs.noise.eta).toEqual([0, 0.5]);
    expect(obs.noise.meanDev[1]).toBeCloseTo(0.2);
  });

  it("rejects an alien header", () => {
    expect(() => readObservables(tempCsv("a,b\n1,2\n"))).toThrow(/unrecognized/);
  });

  it("rejects an empty file", () => {
    expect(() => readObservables(tempCsv("t,norm,total_n,com,n_0\n"))).toThrow(/no data/);
  });
});

describe("readBands", () => {
  it("parses the phase-grid layout", () => {
    const bands = readBands(join(FIXTURES, "bands", "bands.csv"));
    expect(bands.kind).toBe("phi");
    if (bands.kind !== "phi") return;
    expect(bands.phi).toHaveLength(72);
    // bands arrive sorted, so the per-row gaps are non-negative
    for (let i = 0; i < bands.phi.length; i++) {
      expect(bands.gapLowMid[i]).toBeGreaterThanOrEqual(0);
      expect(bands.gapMidHigh[i]).toBeGreaterThanOrEqual(0);
    }
  });

  it("parses the momentum-grid layout", () => {
    const bands = readBands(join(FIXTURES, "meanfield", "bands.csv"));
    expect(bands.kind).toBe("k");
    if (bands.kind !== "k") return;
    expect(bands.k[0]).toBeCloseTo(-Math.PI);
    expect(bands.k[bands.k.length - 1]).toBeCloseTo(Math.PI);
  });
});

describe("small readers", () => {
  it("reads manifests", () => {
    const manifest = readManifest(join(FIXTURES, "fig5"));
    expect(manifest.experiment).toBe("fig5");
    expect(manifest.seed).toBe(3);
    expect(manifest.status).toBe("complete");
    expect(manifest.outputs).toContain("observables.csv");
  });

  it("reads windings", () => {
    const windings = readWindings(join(FIXTURES, "fig4a", "windings.json"));
    expect(windings).toEqual({ phase_sweep: 1, square_loop: 0 });
  });

  it("reads tuning tables", () => {
    const tuning = readTuning(join(FIXTURES, "circuit", "tuning.csv"));
    expect(tuning.phiG).toHaveLength(11);
    expect(Math.min(...tuning.omega)).toBeGreaterThan(4e9);
    expect(Math.max(...tuning.omega)).toBeLessThan(6e9);
  });
});
