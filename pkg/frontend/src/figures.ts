/**
 * SVG renderers for the four figure families the simulator's CSVs support:
 * accuracy vs round, accuracy vs simulated time, a client latency histogram,
 * and per-client class-distribution bars.
 *
 * Rendering is a pure function of the parsed inputs: no clocks, no
 * randomness, stable sort orders everywhere, so identical inputs produce
 * byte-identical SVG.
 */

import { readFileSync } from "node:fs";

import { parseCsv, requireColumns, SchemaError, type Table } from "./csv.js";

export type FigureKind = "AccVsRound" | "AccVsTime" | "LatencyHist" | "ClassDist";

export const FIGURE_KINDS: FigureKind[] = [
  "AccVsRound",
  "AccVsTime",
  "LatencyHist",
  "ClassDist",
];

export interface FigureSpec {
  kind: FigureKind;
  /** Resolved input CSV paths; at least one. */
  inputs: string[];
  /** Moving-average window in rounds; 1 disables smoothing. */
  window: number;
  outPath: string;
}

const WIDTH = 860;
const HEIGHT = 520;
const MARGIN = { left: 62, right: 16, top: 18, bottom: 48 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const FONT = 'font-family="Helvetica, Arial, sans-serif"';

function fmt(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function fmtTick(v: number): string {
  // trim trailing zeros without switching to exponent form for plot ranges
  const s = Number(v.toPrecision(10)).toString();
  return s === "-0" ? "0" : s;
}

/** Round a raw step to the nearest 1/2/5 decade so ticks look intentional. */
function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r >= 5) return 5 * mag;
  if (r >= 2) return 2 * mag;
  return mag;
}

function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = niceStep((hi - lo) / count);
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

interface Scale {
  lo: number;
  hi: number;
  px(v: number): number;
}

function xScale(lo: number, hi: number): Scale {
  const span = hi > lo ? hi - lo : 1;
  return { lo, hi, px: (v) => MARGIN.left + ((v - lo) / span) * PLOT_W };
}

function yScale(lo: number, hi: number): Scale {
  const span = hi > lo ? hi - lo : 1;
  return { lo, hi, px: (v) => MARGIN.top + PLOT_H - ((v - lo) / span) * PLOT_H };
}

function axes(x: Scale, y: Scale, xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + PLOT_H;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0 + PLOT_W}" y2="${y0}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="#333"/>`,
  );
  for (const t of ticks(x.lo, x.hi)) {
    const px = fmt(x.px(t));
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`,
      `<text x="${px}" y="${y0 + 17}" ${FONT} font-size="11" text-anchor="middle">${fmtTick(t)}</text>`,
    );
  }
  for (const t of ticks(y.lo, y.hi)) {
    const py = fmt(y.px(t));
    parts.push(
      `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
      `<line x1="${x0}" y1="${py}" x2="${x0 + PLOT_W}" y2="${py}" stroke="#eee"/>`,
      `<text x="${x0 - 7}" y="${py}" ${FONT} font-size="11" text-anchor="end" dominant-baseline="middle">${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${x0 + PLOT_W / 2}" y="${HEIGHT - 10}" ${FONT} font-size="13" text-anchor="middle">${xLabel}</text>`,
    `<text x="16" y="${MARGIN.top + PLOT_H / 2}" ${FONT} font-size="13" text-anchor="middle" transform="rotate(-90 16 ${MARGIN.top + PLOT_H / 2})">${yLabel}</text>`,
  );
  return parts.join("\n");
}

function svgDocument(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

function readTables(paths: string[]): { path: string; table: Table }[] {
  return paths.map((path) => ({ path, table: parseCsv(readFileSync(path, "utf8")) }));
}

// ---------------------------------------------------------------------------
// accuracy curves
// ---------------------------------------------------------------------------

interface CurvePoint {
  round: number;
  xs: number[];
  ys: number[];
}

/** One curve per (algo, tau, beta); multi-seed groups are averaged per round. */
function collectCurves(
  inputs: { path: string; table: Table }[],
  xColumn: "round" | "sim_time_s",
): Map<string, { x: number; y: number }[]> {
  const groups = new Map<string, Map<number, CurvePoint>>();
  for (const { path, table } of inputs) {
    requireColumns(table, ["round", "sim_time_s", "accuracy", "algo", "tau", "beta", "seed"], path);
    for (const row of table.rows) {
      if (row["accuracy"] === "") continue; // evaluation skipped that round
      const key = groupLabel(row["algo"]!, row["tau"]!, row["beta"]!);
      const round = Number(row["round"]);
      let byRound = groups.get(key);
      if (!byRound) groups.set(key, (byRound = new Map()));
      let pt = byRound.get(round);
      if (!pt) byRound.set(round, (pt = { round, xs: [], ys: [] }));
      pt.xs.push(Number(row[xColumn]));
      pt.ys.push(Number(row["accuracy"]));
    }
  }

  const mean = (v: number[]) => v.reduce((a, b) => a + b, 0) / v.length;
  const curves = new Map<string, { x: number; y: number }[]>();
  for (const key of [...groups.keys()].sort()) {
    const pts = [...groups.get(key)!.values()].sort((a, b) => a.round - b.round);
    curves.set(key, pts.map((p) => ({ x: mean(p.xs), y: mean(p.ys) })));
  }
  return curves;
}

export function groupLabel(algo: string, tau: string, beta: string): string {
  const parts = [algo];
  if (tau !== "") parts.push(`tau=${Number(tau)}`);
  parts.push(`beta=${Number(beta)}`);
  return parts.join(" ");
}

function movingAverage(points: { x: number; y: number }[], window: number) {
  return points.map((p, i) => {
    const from = Math.max(0, i - window + 1);
    let sum = 0;
    for (let j = from; j <= i; j++) sum += points[j]!.y;
    return { x: p.x, y: sum / (i - from + 1) };
  });
}

function polyline(points: { x: number; y: number }[], x: Scale, y: Scale): string {
  return points.map((p) => `${fmt(x.px(p.x))},${fmt(y.px(p.y))}`).join(" ");
}

function renderAccuracyFigure(spec: FigureSpec, xColumn: "round" | "sim_time_s"): string {
  const curves = collectCurves(readTables(spec.inputs), xColumn);
  if (curves.size === 0) throw new SchemaError("no evaluated rounds in any input");

  const all = [...curves.values()].flat();
  const x = xScale(0, Math.max(...all.map((p) => p.x)));
  const yLo = Math.min(...all.map((p) => p.y));
  const yHi = Math.max(...all.map((p) => p.y));
  const pad = Math.max((yHi - yLo) * 0.08, 0.01);
  const y = yScale(Math.max(0, yLo - pad), Math.min(1, yHi + pad));

  const body: string[] = [];
  body.push(axes(x, y, xColumn === "round" ? "global round" : "simulated time [s]", "test accuracy"));

  let idx = 0;
  const legend: string[] = [];
  for (const [label, points] of curves) {
    const color = PALETTE[idx % PALETTE.length]!;
    body.push(
      `<polyline class="curve-raw" fill="none" stroke="${color}" stroke-width="1.2" ` +
        `opacity="${spec.window > 1 ? "0.3" : "1"}" points="${polyline(points, x, y)}"/>`,
    );
    if (spec.window > 1) {
      body.push(
        `<polyline class="curve-smooth" fill="none" stroke="${color}" stroke-width="1.8" ` +
          `points="${polyline(movingAverage(points, spec.window), x, y)}"/>`,
      );
    }
    const ly = MARGIN.top + 14 + idx * 17;
    legend.push(
      `<line x1="${MARGIN.left + 10}" y1="${ly - 4}" x2="${MARGIN.left + 34}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${MARGIN.left + 40}" y="${ly}" ${FONT} font-size="12">${label}</text>`,
    );
    idx++;
  }
  body.push(...legend);
  return svgDocument(body.join("\n"));
}

// ---------------------------------------------------------------------------
// latency histogram
// ---------------------------------------------------------------------------

function renderLatencyHist(spec: FigureSpec): string {
  const values: number[] = [];
  for (const { path, table } of readTables(spec.inputs)) {
    requireColumns(table, ["client_id", "total_s"], path);
    for (const row of table.rows) values.push(Number(row["total_s"]));
  }
  if (values.length === 0) throw new SchemaError("no client rows in any input");

  const binW = niceStep(Math.max(...values) / 10);
  const nBins = Math.floor(Math.max(...values) / binW) + 1;
  const counts = new Array<number>(nBins).fill(0);
  for (const v of values) counts[Math.min(Math.floor(v / binW), nBins - 1)]!++;

  const x = xScale(0, nBins * binW);
  const y = yScale(0, Math.max(...counts));
  const body: string[] = [];
  body.push(axes(x, y, "round-trip latency [s]", "clients"));
  counts.forEach((count, i) => {
    const x0 = x.px(i * binW);
    const x1 = x.px((i + 1) * binW);
    const top = y.px(count);
    body.push(
      `<rect class="bin" data-count="${count}" x="${fmt(x0 + 1)}" y="${fmt(top)}" ` +
        `width="${fmt(x1 - x0 - 2)}" height="${fmt(y.px(0) - top)}" fill="${PALETTE[0]}" stroke="white"/>`,
    );
  });
  body.push(
    `<text x="${MARGIN.left + PLOT_W - 4}" y="${MARGIN.top + 12}" ${FONT} font-size="12" text-anchor="end">` +
      `${values.length} clients, ${fmtTick(binW)} s bins</text>`,
  );
  return svgDocument(body.join("\n"));
}

// ---------------------------------------------------------------------------
// per-client class distribution
// ---------------------------------------------------------------------------

function renderClassDist(spec: FigureSpec): string {
  if (spec.inputs.length !== 1) {
    throw new SchemaError(
      `class-distribution figures take exactly one input CSV, got ${spec.inputs.length}`,
    );
  }
  const [{ path, table }] = readTables(spec.inputs) as [{ path: string; table: Table }];
  requireColumns(table, ["client_id", "label", "count"], path);

  const clients = [...new Set(table.rows.map((r) => Number(r["client_id"])))].sort((a, b) => a - b);
  const labels = [...new Set(table.rows.map((r) => Number(r["label"])))].sort((a, b) => a - b);
  const counts = new Map<string, number>();
  for (const row of table.rows) {
    counts.set(`${Number(row["client_id"])}:${Number(row["label"])}`, Number(row["count"]));
  }
  const totals = clients.map((c) =>
    labels.reduce((sum, l) => sum + (counts.get(`${c}:${l}`) ?? 0), 0),
  );

  const x = xScale(-0.5, clients.length - 0.5);
  const y = yScale(0, Math.max(...totals));
  const body: string[] = [];
  body.push(axes(x, y, "client", "samples per class"));

  const slot = PLOT_W / clients.length;
  const barW = slot * 0.72;
  clients.forEach((client, ci) => {
    let running = 0;
    const xLeft = x.px(ci) - barW / 2;
    for (const label of labels) {
      const n = counts.get(`${client}:${label}`) ?? 0;
      if (n === 0) continue;
      const yTop = y.px(running + n);
      body.push(
        `<rect class="segment" data-client="${client}" data-label="${label}" data-count="${n}" ` +
          `x="${fmt(xLeft)}" y="${fmt(yTop)}" width="${fmt(barW)}" ` +
          `height="${fmt(y.px(running) - yTop)}" fill="${PALETTE[label % PALETTE.length]}" stroke="white" stroke-width="0.5"/>`,
      );
      running += n;
    }
  });

  labels.forEach((label, i) => {
    const lx = MARGIN.left + 10 + i * 84;
    body.push(
      `<rect x="${lx}" y="${MARGIN.top + 4}" width="10" height="10" fill="${PALETTE[label % PALETTE.length]}"/>`,
      `<text x="${lx + 14}" y="${MARGIN.top + 13}" ${FONT} font-size="12">class ${label}</text>`,
    );
  });
  return svgDocument(body.join("\n"));
}

// ---------------------------------------------------------------------------

export function render(spec: FigureSpec): string {
  if (spec.inputs.length === 0) throw new SchemaError("no input files");
  if (!(spec.window >= 1)) throw new SchemaError(`window must be >= 1, got ${spec.window}`);
  switch (spec.kind) {
    case "AccVsRound":
      return renderAccuracyFigure(spec, "round");
    case "AccVsTime":
      return renderAccuracyFigure(spec, "sim_time_s");
    case "LatencyHist":
      return renderLatencyHist(spec);
    case "ClassDist":
      return renderClassDist(spec);
  }
}
