import { createHash } from "node:crypto";
import {
  cpSync,
  mkdtempSync,
  readdirSync,
  readFileSync,
  writeFileSync,
} from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { plan, render } from "../src/render.js";
import { readManifest } from "../src/schemas.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "figrender-"));
}

/** name -> sha256 of every file under dir, recursively. */
function treeHash(dir: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const entry of readdirSync(dir, { withFileTypes: true, recursive: true })) {
    if (!entry.isFile()) continue;
    const path = join(entry.parentPath, entry.name);
    out[path.slice(dir.length)] = createHash("sha256")
      .update(readFileSync(path))
      .digest("hex");
  }
  return out;
}

function planNames(fixture: string): string[] {
  const dir = join(FIXTURES, fixture);
  return plan(dir, readManifest(dir)).map((p) => p.name);
}

describe("plan", () => {
  it("chooses plots by experiment", () => {
    expect(planNames("fig2a")).toEqual(["heatmap", "com", "loop"]);
    expect(planNames("fig4a")).toEqual(["heatmap", "com", "loop"]);
    expect(planNames("fig5")).toEqual(["heatmap", "com", "decay"]);
    expect(planNames("bands")).toEqual(["bands"]);
    expect(planNames("meanfield")).toEqual(["bands"]);
    expect(planNames("circuit")).toEqual(["tuning"]);
  });

  it("sniffs files for unknown experiment names", () => {
    const dir = tempDir();
    cpSync(join(FIXTURES, "fig5"), dir, { recursive: true });
    const manifest = JSON.parse(readFileSync(join(dir, "manifest.json"), "utf8"));
    manifest.experiment = "exotic";
    writeFileSync(join(dir, "manifest.json"), JSON.stringify(manifest));
    // stderr columns present, so the decay plot is planned too
    expect(plan(dir, readManifest(dir)).map((p) => p.name)).toEqual([
      "heatmap",
      "com",
      "decay",
    ]);
  });
});

describe("render", () => {
  it("renders all five plot types from a fig2a + fig5 + bands run set", async () => {
    const out = tempDir();
    const types = new Set<string>();
    for (const fixture of ["fig2a", "fig5", "bands"]) {
      const result = await render(join(FIXTURES, fixture), {
        outDir: join(out, fixture),
      });
      expect(result.skipped).toEqual([]);
      for (const path of result.written) {
        expect(readFileSync(path, "utf8")).toMatch(/^<svg /);
        types.add(path.split("/").pop()!.replace(".svg", ""));
      }
    }
    expect([...types].sort()).toEqual(["bands", "com", "decay", "heatmap", "loop"]);
  });

  it("never touches the run directory", async () => {
    const dir = join(FIXTURES, "fig2a");
    const before = treeHash(dir);
    await render(dir, { outDir: tempDir() });
    expect(treeHash(dir)).toEqual(before);
  });

  it("is idempotent byte for byte", async () => {
    const a = tempDir();
    const b = tempDir();
    await render(join(FIXTURES, "fig5"), { outDir: a });
    await render(join(FIXTURES, "fig5"), { outDir: b });
    expect(treeHash(a)).toEqual(treeHash(b));
    expect(Object.keys(treeHash(a)).length).toBe(3);
  });

  it("rejects an output directory inside the run directory", async () => {
    const dir = tempDir();
    cpSync(join(FIXTURES, "bands"), dir, { recursive: true });
    await expect(render(dir, { outDir: join(dir, "figures") })).rejects.toThrow(
      /inside the run directory/,
    );
  });

  it("reports an empty directory instead of writing anything", async () => {
    const out = tempDir();
    const result = await render(tempDir(), { outDir: out });
    expect(result.written).toEqual([]);
    expect(result.skipped[0].reason).toMatch(/manifest/);
    expect(readdirSync(out)).toEqual([]);
  });

  it("skips plots whose source file is missing", async () => {
    const dir = tempDir();
    writeFileSync(
      join(dir, "manifest.json"),
      JSON.stringify({ experiment: "fig2a", params: { delta: 10 }, seed: 0, status: "running", outputs: [] }),
    );
    const result = await render(dir, { outDir: tempDir() });
    // the loop plot only needs the manifest, so it still renders
    expect(result.written.map((p) => p.split("/").pop())).toEqual(["loop.svg"]);
    expect(result.skipped.map((s) => s.name)).toEqual(["heatmap", "com"]);
    expect(result.skipped[0].reason).toMatch(/observables.csv/);
  });

  it("renders a disorder sweep", async () => {
    const dir = tempDir();
    writeFileSync(
      join(dir, "manifest.json"),
      JSON.stringify({ experiment: "fig4b", params: {}, seed: 0, status: "complete", outputs: ["observables.csv"] }),
    );
    writeFileSync(
      join(dir, "observables.csv"),
      "eta,mean_dev,stderr,n_realizations\n0,0,0,1\n0.5,0.3,0.1,10\n5,2.4,0.4,10\n",
    );
    const result = await render(dir, { outDir: tempDir() });
    expect(result.written.map((p) => p.split("/").pop())).toEqual(["noise.svg"]);
  });

  it("renders the flux tuning curves", async () => {
    const result = await render(join(FIXTURES, "circuit"), { outDir: tempDir() });
    expect(result.written.map((p) => p.split("/").pop())).toEqual(["tuning.svg"]);
    expect(result.skipped).toEqual([]);
  });

  it("renders the square loop with its winding", async () => {
    const out = tempDir();
    const result = await render(join(FIXTURES, "fig4a"), { outDir: out });
    expect(result.skipped).toEqual([]);
    const loop = readFileSync(join(out, "loop.svg"), "utf8");
    expect(loop).toContain("winding 0");
    expect(loop).toContain("trivial detuning loop");
  });

  it("renders the momentum-space bands", async () => {
    const out = tempDir();
    const result = await render(join(FIXTURES, "meanfield"), { outDir: out });
    expect(result.written.map((p) => p.split("/").pop())).toEqual(["bands.svg"]);
    expect(readFileSync(join(out, "bands.svg"), "utf8")).toContain("sublattice A");
  });
});

describe("png output", () => {
  it("rasterizes deterministically when the rasterizer is present", async () => {
    let available = true;
    try {
      await import("@resvg/resvg-js");
    } catch {
      available = false;
    }
    if (!available) return; // optional dependency absent; svg-only install
    const a = tempDir();
    const b = tempDir();
    await render(join(FIXTURES, "bands"), { outDir: a, format: "png", dpi: 96 });
    await render(join(FIXTURES, "bands"), { outDir: b, format: "png", dpi: 96 });
    const bytesA = readFileSync(join(a, "bands.png"));
    expect(bytesA.subarray(1, 4).toString()).toBe("PNG");
    expect(bytesA.equals(readFileSync(join(b, "bands.png")))).toBe(true);
  });
});

describe("fixture provenance", () => {
  it("fixtures are completed runs", () => {
    for (const fixture of readdirSync(FIXTURES)) {
      const manifest = readManifest(join(FIXTURES, fixture));
      expect(manifest.status).toBe("complete");
    }
  });
});
