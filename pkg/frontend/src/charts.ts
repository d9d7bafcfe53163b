// ── figure construction ──
//
// Three figure kinds, all built from harness CSV output:
//   cvar_trace        per-arm true-CVaR evolution, one panel per arm,
//                     stages where the arm is optimal highlighted.
//   lambda_sweep      final metrics against the decay rate, three panels,
//                     one curve per method.
//   stage_performance metrics against stage, three panels, one curve per
//                     method (method taken from the aggregate filename).
//
// Everything here is a pure function of the parsed rows, so rendering the
// same inputs always yields the same scene.

import { CsvTable, DataError, numericColumn, stringColumn } from "./csv.js";
import { Panel, PolylineItem, Scene, SceneItem, TextItem } from "./svg.js";

// ── fixed style ──

export const METHOD_COLORS: Record<string, string> = {
  sample_average: "#ff7f0e", // orange
  weighted_empirical: "#2ca02c", // green
  dual_recursive: "#1f77b4", // blue
};
export const FALLBACK_COLOR = "#7f7f7f";
export const BASE_TRACE_COLOR = "#999999";
export const OPTIMAL_COLOR = "#d62728"; // red highlight for optimal stages

const AXIS_COLOR = "#333333";
const GRID_COLOR = "#dddddd";
const TEXT_COLOR = "#333333";
const BACKGROUND = "#ffffff";

const PLOT_W = 220;
const PLOT_H = 150;
const MARGIN_L = 56;
const MARGIN_R = 14;
const MARGIN_T = 28;
const MARGIN_B = 38;
const CELL_W = MARGIN_L + PLOT_W + MARGIN_R;
const CELL_H = MARGIN_T + PLOT_H + MARGIN_B;
const FIG_PAD = 16;
const HEADER_H = 40; // figure title line plus legend line

export function methodColor(method: string): string {
  return METHOD_COLORS[method] ?? FALLBACK_COLOR;
}

// ── row models and CSV loaders ──

export interface TraceRow {
  stage: number;
  arm: number;
  trueCvar: number;
  isOptimal: boolean;
}

export interface SweepRow {
  method: string;
  lambda: number;
  hitRate: number;
  avgRegret: number;
  empiricalCvar: number;
}

export interface StageSeries {
  method: string;
  stages: number[];
  hitRate: number[];
  avgRegret: number[];
  empiricalCvar: number[];
}

export function readTraceRows(table: CsvTable): TraceRow[] {
  const stage = numericColumn(table, "stage");
  const arm = numericColumn(table, "arm");
  const cvar = numericColumn(table, "true_cvar");
  const optimal = numericColumn(table, "is_optimal");
  const rows: TraceRow[] = [];
  for (let i = 0; i < stage.length; i++) {
    const flag = optimal[i] as number;
    if (flag !== 0 && flag !== 1) {
      throw new DataError(
        `${table.source}: column 'is_optimal' line ${i + 2}: expected 0 or 1, got ${flag}`,
      );
    }
    rows.push({
      stage: stage[i] as number,
      arm: arm[i] as number,
      trueCvar: cvar[i] as number,
      isOptimal: flag === 1,
    });
  }
  return rows;
}

export function readSweepRows(table: CsvTable): SweepRow[] {
  const method = stringColumn(table, "method");
  const lambda = numericColumn(table, "lambda");
  const hitRate = numericColumn(table, "hit_rate_T");
  const avgRegret = numericColumn(table, "avg_regret_T");
  const empiricalCvar = numericColumn(table, "empirical_cvar_T");
  return method.map((name, i) => ({
    method: name,
    lambda: lambda[i] as number,
    hitRate: hitRate[i] as number,
    avgRegret: avgRegret[i] as number,
    empiricalCvar: empiricalCvar[i] as number,
  }));
}

export function readStageSeries(table: CsvTable, method: string): StageSeries {
  return {
    method,
    stages: numericColumn(table, "stage"),
    hitRate: numericColumn(table, "hit_rate"),
    avgRegret: numericColumn(table, "avg_regret"),
    empiricalCvar: numericColumn(table, "empirical_cvar"),
  };
}

/**
 * Derive the method name from an aggregate CSV filename of the form
 * `aggregate_<method>_<lambda>.csv`; anything else keeps its basename so the
 * figure still renders, just with the fallback color.
 */
export function methodFromFilename(path: string): string {
  const base = path.replace(/\\/g, "/").split("/").pop() ?? path;
  const stem = base.replace(/\.csv$/i, "");
  if (stem.startsWith("aggregate_")) {
    const rest = stem.slice("aggregate_".length);
    const cut = rest.lastIndexOf("_");
    if (cut > 0 && rest.slice(cut + 1) !== "" && Number.isFinite(Number(rest.slice(cut + 1)))) {
      return rest.slice(0, cut);
    }
  }
  return stem;
}

// ── layout helpers ──

function padDomain(lo: number, hi: number): [number, number] {
  if (!(hi > lo)) {
    const pad = Math.max(0.5, Math.abs(lo) * 0.1);
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}

/** x-axes span exactly the data extent, so the axis reflects the input range. */
function exactDomain(lo: number, hi: number): [number, number] {
  return hi > lo ? [lo, hi] : padDomain(lo, hi);
}

function tickLabel(value: number): string {
  const rounded = Number(value.toPrecision(3));
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

interface Frame {
  toX(value: number): number;
  toY(value: number): number;
  items: SceneItem[];
}

function makeFrame(
  cellX: number,
  cellY: number,
  title: string,
  xLabel: string,
  xDomain: [number, number],
  yDomain: [number, number],
): Frame {
  const plotX = cellX + MARGIN_L;
  const plotY = cellY + MARGIN_T;
  const [x0, x1] = xDomain;
  const [y0, y1] = yDomain;
  const toX = (v: number) => plotX + ((v - x0) / (x1 - x0)) * PLOT_W;
  const toY = (v: number) => plotY + PLOT_H - ((v - y0) / (y1 - y0)) * PLOT_H;

  const items: SceneItem[] = [];
  // gridlines at the three tick positions of each axis
  for (const frac of [0, 0.5, 1]) {
    const gx = plotX + frac * PLOT_W;
    const gy = plotY + frac * PLOT_H;
    items.push({ kind: "polyline", points: [[gx, plotY], [gx, plotY + PLOT_H]], color: GRID_COLOR, width: 1 });
    items.push({ kind: "polyline", points: [[plotX, gy], [plotX + PLOT_W, gy]], color: GRID_COLOR, width: 1 });
  }
  items.push({
    kind: "rect",
    x: plotX,
    y: plotY,
    width: PLOT_W,
    height: PLOT_H,
    stroke: AXIS_COLOR,
    strokeWidth: 1,
  });
  items.push({
    kind: "text",
    x: plotX + PLOT_W / 2,
    y: cellY + 18,
    text: title,
    size: 12,
    color: TEXT_COLOR,
    anchor: "middle",
  });
  // y tick labels: bottom, middle, top of the value range
  const yTicks: Array<[number, number]> = [
    [y0, plotY + PLOT_H],
    [(y0 + y1) / 2, plotY + PLOT_H / 2],
    [y1, plotY],
  ];
  for (const [value, y] of yTicks) {
    items.push({
      kind: "text",
      x: plotX - 6,
      y: y + 3.5,
      text: tickLabel(value),
      size: 10,
      color: TEXT_COLOR,
      anchor: "end",
    });
  }
  // x tick labels: left, middle, right
  const xTicks: Array<[number, number]> = [
    [x0, plotX],
    [(x0 + x1) / 2, plotX + PLOT_W / 2],
    [x1, plotX + PLOT_W],
  ];
  for (const [value, x] of xTicks) {
    items.push({
      kind: "text",
      x,
      y: plotY + PLOT_H + 15,
      text: tickLabel(value),
      size: 10,
      color: TEXT_COLOR,
      anchor: "middle",
    });
  }
  items.push({
    kind: "text",
    x: plotX + PLOT_W / 2,
    y: plotY + PLOT_H + 30,
    text: xLabel,
    size: 11,
    color: TEXT_COLOR,
    anchor: "middle",
  });
  return { toX, toY, items };
}

interface LegendEntry {
  label: string;
  color: string;
}

function figureHeader(title: string, legend: LegendEntry[]): SceneItem[] {
  const items: SceneItem[] = [];
  items.push({
    kind: "text",
    x: FIG_PAD,
    y: 22,
    text: title,
    size: 14,
    color: TEXT_COLOR,
    anchor: "start",
  });
  let x = FIG_PAD;
  for (const entry of legend) {
    items.push({ kind: "polyline", points: [[x, 36], [x + 18, 36]], color: entry.color, width: 3 });
    const label: TextItem = {
      kind: "text",
      x: x + 23,
      y: 39.5,
      text: entry.label,
      size: 11,
      color: TEXT_COLOR,
      anchor: "start",
    };
    items.push(label);
    x += 23 + entry.label.length * 6.2 + 16;
  }
  return items;
}

function sceneShell(title: string, legend: LegendEntry[], cols: number, rows: number): Scene {
  return {
    width: FIG_PAD * 2 + cols * CELL_W,
    height: FIG_PAD + HEADER_H + rows * CELL_H + FIG_PAD,
    background: BACKGROUND,
    extras: figureHeader(title, legend),
    panels: [],
  };
}

function cellOrigin(index: number, cols: number): [number, number] {
  const col = index % cols;
  const row = Math.floor(index / cols);
  return [FIG_PAD + col * CELL_W, FIG_PAD + HEADER_H + row * CELL_H];
}

// ── figure builders ──

export function buildCvarTrace(rows: TraceRow[]): Scene {
  if (rows.length === 0) {
    throw new DataError("trace has no rows");
  }
  const byArm = new Map<number, TraceRow[]>();
  for (const row of rows) {
    const bucket = byArm.get(row.arm);
    if (bucket === undefined) {
      byArm.set(row.arm, [row]);
    } else {
      bucket.push(row);
    }
  }
  const arms = [...byArm.keys()].sort((a, b) => a - b);
  const cols = Math.min(4, arms.length);
  const gridRows = Math.ceil(arms.length / cols);
  const scene = sceneShell(
    "true CVaR by arm",
    [
      { label: "arm trajectory", color: BASE_TRACE_COLOR },
      { label: "optimal arm", color: OPTIMAL_COLOR },
    ],
    cols,
    gridRows,
  );

  const stages = rows.map((row) => row.stage);
  const xDomain = exactDomain(Math.min(...stages), Math.max(...stages));

  arms.forEach((arm, index) => {
    const armRows = [...(byArm.get(arm) as TraceRow[])].sort((a, b) => a.stage - b.stage);
    const values = armRows.map((row) => row.trueCvar);
    const yDomain = padDomain(Math.min(...values), Math.max(...values));
    const [cellX, cellY] = cellOrigin(index, cols);
    const frame = makeFrame(cellX, cellY, `arm ${arm}`, "stage", xDomain, yDomain);
    const items = [...frame.items];

    items.push({
      kind: "polyline",
      points: armRows.map((row) => [frame.toX(row.stage), frame.toY(row.trueCvar)]),
      color: BASE_TRACE_COLOR,
      width: 1.5,
    });

    // maximal runs of optimal stages, drawn on top in the highlight color
    let runStart = -1;
    for (let i = 0; i <= armRows.length; i++) {
      const optimal = i < armRows.length && (armRows[i] as TraceRow).isOptimal;
      if (optimal && runStart < 0) {
        runStart = i;
      } else if (!optimal && runStart >= 0) {
        const run = armRows.slice(runStart, i);
        const segment: PolylineItem = {
          kind: "polyline",
          points: run.map((row) => [frame.toX(row.stage), frame.toY(row.trueCvar)]),
          color: OPTIMAL_COLOR,
          width: 2.5,
        };
        if (run.length === 1) {
          // an isolated optimal stage still gets a visible tick
          const x = frame.toX((run[0] as TraceRow).stage);
          const y = frame.toY((run[0] as TraceRow).trueCvar);
          segment.points = [[x - 2, y], [x + 2, y]];
        }
        items.push(segment);
        runStart = -1;
      }
    }
    scene.panels.push({ items });
  });
  return scene;
}

interface MetricSpec {
  title: string;
  pick(row: SweepRow): number;
}

export function buildLambdaSweep(rows: SweepRow[]): Scene {
  if (rows.length === 0) {
    throw new DataError("sweep has no rows");
  }
  const methods: string[] = [];
  for (const row of rows) {
    if (!methods.includes(row.method)) {
      methods.push(row.method);
    }
  }
  const scene = sceneShell(
    "final performance across decay rates",
    methods.map((method) => ({ label: method, color: methodColor(method) })),
    3,
    1,
  );

  const lambdas = rows.map((row) => row.lambda);
  const xDomain = exactDomain(Math.min(...lambdas), Math.max(...lambdas));
  const metrics: MetricSpec[] = [
    { title: "final hit rate", pick: (row) => row.hitRate },
    { title: "final average regret", pick: (row) => row.avgRegret },
    { title: "final empirical CVaR", pick: (row) => row.empiricalCvar },
  ];

  metrics.forEach((metric, index) => {
    const values = rows.map(metric.pick);
    const yDomain = padDomain(Math.min(...values), Math.max(...values));
    const [cellX, cellY] = cellOrigin(index, 3);
    const frame = makeFrame(cellX, cellY, metric.title, "lambda", xDomain, yDomain);
    const items = [...frame.items];
    for (const method of methods) {
      const curve = rows
        .filter((row) => row.method === method)
        .sort((a, b) => a.lambda - b.lambda);
      const color = methodColor(method);
      items.push({
        kind: "polyline",
        points: curve.map((row) => [frame.toX(row.lambda), frame.toY(metric.pick(row))]),
        color,
        width: 2,
      });
      for (const row of curve) {
        items.push({
          kind: "rect",
          x: frame.toX(row.lambda) - 1.75,
          y: frame.toY(metric.pick(row)) - 1.75,
          width: 3.5,
          height: 3.5,
          fill: color,
        });
      }
    }
    scene.panels.push({ items });
  });
  return scene;
}

export function buildStagePerformance(seriesList: StageSeries[]): Scene {
  if (seriesList.length === 0) {
    throw new DataError("no aggregate series given");
  }
  const scene = sceneShell(
    "performance over stages",
    seriesList.map((series) => ({ label: series.method, color: methodColor(series.method) })),
    3,
    1,
  );

  const allStages = seriesList.flatMap((series) => series.stages);
  const xDomain = exactDomain(Math.min(...allStages), Math.max(...allStages));
  const metrics: Array<{ title: string; pick(series: StageSeries): number[] }> = [
    { title: "hit rate", pick: (series) => series.hitRate },
    { title: "average regret", pick: (series) => series.avgRegret },
    { title: "empirical CVaR", pick: (series) => series.empiricalCvar },
  ];

  metrics.forEach((metric, index) => {
    const values = seriesList.flatMap(metric.pick);
    const yDomain = padDomain(Math.min(...values), Math.max(...values));
    const [cellX, cellY] = cellOrigin(index, 3);
    const frame = makeFrame(cellX, cellY, metric.title, "stage", xDomain, yDomain);
    const items = [...frame.items];
    for (const series of seriesList) {
      const metricValues = metric.pick(series);
      items.push({
        kind: "polyline",
        points: series.stages.map((stage, i) => [
          frame.toX(stage),
          frame.toY(metricValues[i] as number),
        ]),
        color: methodColor(series.method),
        width: 1.8,
      });
    }
    scene.panels.push({ items });
  });
  return scene;
}
