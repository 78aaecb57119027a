/**
 * SVG to PNG via the optional resvg binding. Kept behind a dynamic import
 * so SVG output works even when the native module is not installed; PNG
 * requests then fail with an actionable message.
 */

import { existsSync } from "node:fs";

const FONT_DIRS = [
  "/usr/share/fonts",
  "/usr/local/share/fonts",
  // matplotlib ships DejaVu; a headless box often has no other TTFs
  "/usr/lib/python3/dist-packages/matplotlib/mpl-data/fonts/ttf",
  "/usr/local/lib/python3.11/dist-packages/matplotlib/mpl-data/fonts/ttf",
  "/usr/local/lib/python3.10/dist-packages/matplotlib/mpl-data/fonts/ttf",
];

export async function rasterize(svg: string, dpi: number): Promise<Buffer> {
  let mod;
  try {
    mod = await import("@resvg/resvg-js");
  } catch {
    throw new Error(
      "PNG output needs the optional @resvg/resvg-js dependency; " +
        "install it or render with --format svg",
    );
  }
  const resvg = new mod.Resvg(svg, {
    fitTo: { mode: "zoom", value: dpi / 96 },
    font: {
      loadSystemFonts: true,
      fontDirs: FONT_DIRS.filter((d) => existsSync(d)),
      defaultFontFamily: "DejaVu Sans",
    },
  });
  return resvg.render().asPng();
}
