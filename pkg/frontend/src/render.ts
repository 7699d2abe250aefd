import * as fs from "node:fs";
import * as path from "node:path";

import { FIGURES, figureIds, selectSeries, Series } from "./figures.js";
import { parseSweepCsv, SchemaError } from "./schema.js";
import { renderFigure } from "./svg.js";

/** Raised for bad invocations (unknown figure, unusable paths). */
export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UsageError";
  }
}

export interface RenderResult {
  svgPath: string;
  sidecarPath: string;
}

/** The sidecar keeps the plotted numbers next to the image. */
export function sidecarPath(outPath: string): string {
  const ext = path.extname(outPath);
  return outPath.slice(0, outPath.length - ext.length) + ".data.txt";
}

/**
 * Render one figure from a sweep-table CSV.
 *
 * All validation happens before anything is written, so a bad table or a
 * bad figure id leaves no partial output behind.  The sidecar is a verbatim
 * copy of the input table.
 */
export function render(csvPath: string, figureId: string, outPath: string): RenderResult {
  const spec = FIGURES[figureId];
  if (!spec) {
    throw new UsageError(
      `unknown figure '${figureId}' (valid: ${figureIds().join(", ")})`,
    );
  }
  let text: string;
  try {
    text = fs.readFileSync(csvPath, "utf8");
  } catch {
    throw new UsageError(`cannot read csv file '${csvPath}'`);
  }
  const rows = parseSweepCsv(text);
  const seriesPerPanel: Series[][] = spec.panels.map((panel) => {
    const series = selectSeries(rows, panel);
    if (series.length === 0) {
      throw new SchemaError(
        `no rows for axis '${panel.axis}' with metric '${panel.metric}'`,
      );
    }
    return series;
  });
  const svg = renderFigure(spec, seriesPerPanel);
  const sidecar = sidecarPath(outPath);
  fs.writeFileSync(outPath, svg, "utf8");
  fs.writeFileSync(sidecar, text, "utf8");
  return { svgPath: outPath, sidecarPath: sidecar };
}
