import { SweepRow } from "./schema.js";

/** One chart panel: a (sweep axis, metric) slice of the table. */
export interface PanelSpec {
  axis: string;
  metric: "aer" | "nmse_db";
  yScale: "log" | "linear";
  xLabel: string;
  yLabel: string;
  title: string;
}

export interface FigureSpec {
  id: string;
  title: string;
  panels: PanelSpec[];
}

const X_LABELS: Record<string, string> = {
  M: "pilot length M",
  P_t: "transmit power [dBm]",
  N_r: "receive antennas N_r",
  d: "link distance [m]",
  n_hires: "high-resolution ADC chains",
};

const AER_LABEL = "activity error rate";
const NMSE_LABEL = "channel NMSE [dB]";

function aerPanel(axis: string, title: string): PanelSpec {
  return {
    axis,
    metric: "aer",
    yScale: "log",
    xLabel: X_LABELS[axis],
    yLabel: AER_LABEL,
    title,
  };
}

function nmsePanel(axis: string, title: string): PanelSpec {
  return {
    axis,
    metric: "nmse_db",
    yScale: "linear",
    xLabel: X_LABELS[axis],
    yLabel: NMSE_LABEL,
    title,
  };
}

/** Registry of every figure the renderer knows how to draw. */
export const FIGURES: Record<string, FigureSpec> = {
  aer_vs_m: {
    id: "aer_vs_m",
    title: "Detection error vs pilot length",
    panels: [aerPanel("M", "")],
  },
  nmse_vs_m: {
    id: "nmse_vs_m",
    title: "Estimation error vs pilot length",
    panels: [nmsePanel("M", "")],
  },
  aer_vs_pt: {
    id: "aer_vs_pt",
    title: "Detection error vs transmit power",
    panels: [aerPanel("P_t", "")],
  },
  nmse_vs_pt: {
    id: "nmse_vs_pt",
    title: "Estimation error vs transmit power",
    panels: [nmsePanel("P_t", "")],
  },
  gains_vs_m_nr: {
    id: "gains_vs_m_nr",
    title: "Gains vs pilot length and array size",
    panels: [
      aerPanel("M", "(a) detection vs M"),
      nmsePanel("N_r", "(b) estimation vs N_r"),
    ],
  },
  nmse_vs_d: {
    id: "nmse_vs_d",
    title: "Estimation error vs link distance",
    panels: [nmsePanel("d", "")],
  },
  metrics_vs_hires: {
    id: "metrics_vs_hires",
    title: "Effect of the high-resolution chain count",
    panels: [
      aerPanel("n_hires", "(a) detection"),
      nmsePanel("n_hires", "(b) estimation"),
    ],
  },
};

export function figureIds(): string[] {
  return Object.keys(FIGURES);
}

/** One plotted line: an algorithm's points along the panel axis. */
export interface Series {
  label: string;
  points: { x: number; y: number; err: number }[];
}

/**
 * Slice the table down to one panel and group it into per-algorithm series.
 *
 * Series order follows first appearance in the table and points are sorted
 * by sweep value, so the same CSV always yields the same drawing.
 */
export function selectSeries(rows: SweepRow[], panel: PanelSpec): Series[] {
  const byAlgo = new Map<string, Series>();
  for (const row of rows) {
    if (row.axis !== panel.axis || row.metric !== panel.metric) continue;
    let series = byAlgo.get(row.algorithm);
    if (!series) {
      series = { label: row.algorithm, points: [] };
      byAlgo.set(row.algorithm, series);
    }
    series.points.push({ x: row.value, y: row.mean, err: row.stderr });
  }
  const out = [...byAlgo.values()];
  for (const series of out) {
    series.points.sort((a, b) => a.x - b.x);
  }
  return out;
}
