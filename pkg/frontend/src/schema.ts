import Papa from "papaparse";

/** One summarized sweep point: a (sweep value, algorithm, metric) cell. */
export interface SweepRow {
  axis: string;
  value: number;
  algorithm: string;
  metric: string;
  mean: number;
  stderr: number;
  trials: number;
}

export const REQUIRED_COLUMNS = [
  "axis",
  "value",
  "algorithm",
  "metric",
  "mean",
  "stderr",
  "trials",
] as const;

/** Raised when a CSV does not match the sweep-table contract. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

function toNumber(raw: string, column: string, line: number): number {
  const v = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(v)) {
    throw new SchemaError(
      `row ${line}: column '${column}' is not a finite number (got '${raw}')`,
    );
  }
  return v;
}

/**
 * Parse a sweep-table CSV into typed rows.
 *
 * The header must contain every required column (extras are ignored) and
 * there must be at least one data row.  Numeric fields are checked for
 * finiteness so that malformed tables fail here rather than mid-plot.
 */
export function parseSweepCsv(text: string): SweepRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const col of REQUIRED_COLUMNS) {
    if (!fields.includes(col)) {
      throw new SchemaError(`missing column '${col}'`);
    }
  }
  if (parsed.data.length === 0) {
    throw new SchemaError("no data rows");
  }
  return parsed.data.map((rec, i) => {
    const line = i + 2; // header is line 1
    const trials = toNumber(rec.trials, "trials", line);
    if (!Number.isInteger(trials) || trials < 1) {
      throw new SchemaError(
        `row ${line}: column 'trials' must be a positive integer (got '${rec.trials}')`,
      );
    }
    return {
      axis: rec.axis,
      value: toNumber(rec.value, "value", line),
      algorithm: rec.algorithm,
      metric: rec.metric,
      mean: toNumber(rec.mean, "mean", line),
      stderr: toNumber(rec.stderr, "stderr", line),
      trials,
    };
  });
}
