#!/usr/bin/env node
/**
 * Usage: bosepump-figures render <run_dir> [--format png|svg] [--dpi N] [--out DIR]
 *
 * Exit codes: 0 when at least one figure was written, 1 when nothing could
 * be rendered, 2 for usage errors.
 */

import { realpathSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { render } from "./render.js";

const USAGE =
  "usage: bosepump-figures render <run_dir> [--format png|svg] [--dpi N] [--out DIR]";

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        format: { type: "string" },
        dpi: { type: "string" },
        out: { type: "string" },
      },
    });
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(USAGE);
    return 2;
  }
  const [command, runDir] = parsed.positionals;
  if (command !== "render" || !runDir || parsed.positionals.length > 2) {
    console.error(USAGE);
    return 2;
  }
  const format = parsed.values.format ?? "svg";
  if (format !== "svg" && format !== "png") {
    console.error(`unknown format ${format}; expected png or svg`);
    return 2;
  }
  let dpi: number | undefined;
  if (parsed.values.dpi !== undefined) {
    dpi = Number(parsed.values.dpi);
    if (!Number.isFinite(dpi) || dpi <= 0) {
      console.error(`--dpi must be a positive number, got ${parsed.values.dpi}`);
      return 2;
    }
  }

  let result;
  try {
    result = await render(runDir, { format, dpi, outDir: parsed.values.out });
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
  for (const skip of result.skipped) {
    console.error(`skip ${skip.name}: ${skip.reason}`);
  }
  for (const path of result.written) {
    console.log(`wrote ${path}`);
  }
  if (result.written.length === 0) {
    console.error("nothing rendered");
    return 1;
  }
  return 0;
}

function invokedDirectly(): boolean {
  if (process.argv[1] === undefined) return false;
  try {
    // realpath so the npm bin symlink still matches import.meta.url
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
