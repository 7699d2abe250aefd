import { FigureSpec, PanelSpec, Series } from "./figures.js";

/** Values at or below zero are pinned here before taking logs. */
export const LOG_FLOOR = 1e-5;

const PANEL_W = 460;
const PANEL_H = 350;
const MARGIN = { top: 30, right: 14, bottom: 46, left: 64 };
const TITLE_H = 26;
const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Fixed two-decimal coordinates keep the output byte-stable. */
function px(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  const e = Math.floor(Math.log10(a));
  const m = Number((v / Math.pow(10, e)).toPrecision(3));
  return m === 1 ? `1e${e}` : `${m}e${e}`;
}

interface Scale {
  map(v: number): number;
  ticks: number[];
}

function niceStep(span: number, n: number): number {
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5]) {
    if (m * mag >= raw) return m * mag;
  }
  return 10 * mag;
}

function linearScale(lo: number, hi: number, rLo: number, rHi: number, n: number): Scale {
  if (hi === lo) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const step = niceStep(hi - lo, n);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push(Number((Math.round(t / step) * step).toPrecision(12)));
  }
  const k = (rHi - rLo) / (hi - lo);
  return { map: (v) => rLo + (v - lo) * k, ticks };
}

function logScale(lo: number, hi: number, rLo: number, rHi: number): Scale {
  lo = Math.max(lo, LOG_FLOOR) / 1.5;
  hi = Math.max(hi, lo) * 1.5;
  const lLo = Math.log10(lo);
  const lHi = Math.log10(hi);
  const ticks: number[] = [];
  for (let e = Math.ceil(lLo); e <= Math.floor(lHi); e += 1) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length < 2) {
    for (let e = Math.floor(lLo); e <= Math.floor(lHi); e += 1) {
      for (const m of [2, 5]) {
        const t = m * Math.pow(10, e);
        if (t >= lo && t <= hi) ticks.push(t);
      }
    }
    ticks.sort((a, b) => a - b);
  }
  const k = (rHi - rLo) / (lHi - lLo);
  return { map: (v) => rLo + (Math.log10(Math.max(v, LOG_FLOOR)) - lLo) * k, ticks };
}

function yExtent(series: Series[], log: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      let a = p.y - p.err;
      let b = p.y + p.err;
      if (log) {
        a = Math.max(a, LOG_FLOOR);
        b = Math.max(b, LOG_FLOOR);
      }
      lo = Math.min(lo, a);
      hi = Math.max(hi, b);
    }
  }
  return [lo, hi];
}

function xExtent(series: Series[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      lo = Math.min(lo, p.x);
      hi = Math.max(hi, p.x);
    }
  }
  return [lo, hi];
}

function renderPanel(panel: PanelSpec, series: Series[], xOff: number): string {
  if (series.length === 0) {
    throw new Error(`panel '${panel.axis}/${panel.metric}' has no series`);
  }
  const left = xOff + MARGIN.left;
  const right = xOff + PANEL_W - MARGIN.right;
  const top = TITLE_H + MARGIN.top;
  const bottom = TITLE_H + PANEL_H - MARGIN.bottom;
  const log = panel.yScale === "log";

  const [xLo, xHi] = xExtent(series);
  const [yLo, yHi] = yExtent(series, log);
  const xs = linearScale(xLo, xHi, left, right, 6);
  const ys = log ? logScale(yLo, yHi, bottom, top) : linearScale(yLo, yHi, bottom, top, 5);

  const parts: string[] = [];
  if (panel.title) {
    const cx = (left + right) / 2;
    parts.push(
      `<text x="${px(cx)}" y="${px(top - 10)}" text-anchor="middle" ${FONT} ` +
        `font-size="12">${esc(panel.title)}</text>`,
    );
  }

  // grid and ticks
  for (const t of ys.ticks) {
    const y = ys.map(t);
    parts.push(
      `<line x1="${px(left)}" y1="${px(y)}" x2="${px(right)}" y2="${px(y)}" ` +
        `stroke="#dddddd" stroke-width="0.5"/>`,
    );
    parts.push(
      `<text x="${px(left - 6)}" y="${px(y + 3.5)}" text-anchor="end" ${FONT} ` +
        `font-size="10">${esc(fmtTick(t))}</text>`,
    );
  }
  for (const t of xs.ticks) {
    const x = xs.map(t);
    parts.push(
      `<line x1="${px(x)}" y1="${px(bottom)}" x2="${px(x)}" y2="${px(bottom + 4)}" ` +
        `stroke="#000000" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${px(x)}" y="${px(bottom + 16)}" text-anchor="middle" ${FONT} ` +
        `font-size="10">${esc(fmtTick(t))}</text>`,
    );
  }
  parts.push(
    `<rect x="${px(left)}" y="${px(top)}" width="${px(right - left)}" ` +
      `height="${px(bottom - top)}" fill="none" stroke="#000000" stroke-width="1"/>`,
  );

  // axis labels
  parts.push(
    `<text x="${px((left + right) / 2)}" y="${px(bottom + 34)}" text-anchor="middle" ` +
      `${FONT} font-size="11">${esc(panel.xLabel)}</text>`,
  );
  const yl = `translate(${px(xOff + 16)},${px((top + bottom) / 2)}) rotate(-90)`;
  parts.push(
    `<text transform="${yl}" text-anchor="middle" ${FONT} font-size="11">` +
      `${esc(panel.yLabel)}</text>`,
  );

  // data
  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    for (const p of s.points) {
      const x = xs.map(p.x);
      const lo = ys.map(log ? Math.max(p.y - p.err, LOG_FLOOR) : p.y - p.err);
      const hi = ys.map(p.y + p.err);
      parts.push(
        `<line x1="${px(x)}" y1="${px(lo)}" x2="${px(x)}" y2="${px(hi)}" ` +
          `stroke="${color}" stroke-width="1"/>`,
      );
      for (const yv of [lo, hi]) {
        parts.push(
          `<line x1="${px(x - 3)}" y1="${px(yv)}" x2="${px(x + 3)}" y2="${px(yv)}" ` +
            `stroke="${color}" stroke-width="1"/>`,
        );
      }
    }
    const pts = s.points
      .map((p) => `${px(xs.map(p.x))},${px(ys.map(p.y))}`)
      .join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${px(xs.map(p.x))}" cy="${px(ys.map(p.y))}" r="3" ` +
          `fill="${color}"/>`,
      );
    }
  });

  // legend, top right inside the frame
  const labelW = Math.max(...series.map((s) => s.label.length)) * 6.2;
  const lw = 30 + labelW;
  const lx = right - lw - 6;
  const ly = top + 6;
  parts.push(
    `<rect x="${px(lx)}" y="${px(ly)}" width="${px(lw)}" ` +
      `height="${px(series.length * 15 + 6)}" fill="#ffffff" fill-opacity="0.85" ` +
      `stroke="#999999" stroke-width="0.5"/>`,
  );
  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    const ry = ly + 11 + si * 15;
    parts.push(
      `<line x1="${px(lx + 5)}" y1="${px(ry - 3)}" x2="${px(lx + 21)}" ` +
        `y2="${px(ry - 3)}" stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(
      `<circle cx="${px(lx + 13)}" cy="${px(ry - 3)}" r="3" fill="${color}"/>`,
    );
    parts.push(
      `<text x="${px(lx + 26)}" y="${px(ry)}" ${FONT} font-size="10">` +
        `${esc(s.label)}</text>`,
    );
  });

  return parts.join("\n");
}

/** Build the complete SVG document for a figure. */
export function renderFigure(spec: FigureSpec, seriesPerPanel: Series[][]): string {
  const width = spec.panels.length * PANEL_W;
  const height = TITLE_H + PANEL_H;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    `<text x="${px(width / 2)}" y="18" text-anchor="middle" ${FONT} ` +
      `font-size="13" font-weight="bold">${esc(spec.title)}</text>`,
  ];
  spec.panels.forEach((panel, i) => {
    parts.push(renderPanel(panel, seriesPerPanel[i], i * PANEL_W));
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
