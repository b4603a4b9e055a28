/** Chart layout: converts a Figure into backend-independent draw operations. */

import { Figure, Panel, Series } from "./figures";

export type DrawOp =
  | { op: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { op: "line"; x1: number; y1: number; x2: number; y2: number; stroke: string; width: number }
  | { op: "polyline"; points: Array<[number, number]>; stroke: string; width: number }
  | {
      op: "text";
      x: number;
      y: number;
      text: string;
      size: number;
      color: string;
      anchor: "start" | "middle" | "end";
    };

export interface Scene {
  width: number;
  height: number;
  background: string;
  ops: DrawOp[];
}

const PANEL_W = 640;
const PANEL_H = 300;
const MARGIN = { top: 46, right: 24, bottom: 52, left: 78 };
const AXIS = "#444444";
const GRID = "#dddddd";
const TEXT = "#222222";

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Tick positions covering [min, max] at a 1/2/5 step. */
export function niceTicks(min: number, max: number, target = 5): number[] {
  if (!(max > min)) {
    max = min + (Math.abs(min) || 1);
  }
  const span = max - min;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 10000) return `${round2(v / 1000)}k`;
  if (abs >= 1) return String(round2(v));
  return String(Number(v.toPrecision(3)));
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  return [lo, hi];
}

function panelOps(panel: Panel, xOffset: number, yOffset: number): DrawOp[] {
  const ops: DrawOp[] = [];
  const plotX = xOffset + MARGIN.left;
  const plotY = yOffset + MARGIN.top;
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;

  const allX = panel.series.flatMap((s) => s.x);
  const allY = panel.series.flatMap((s) => s.y);
  let [xMin, xMax] = extent(allX);
  let [yMin, yMax] = extent(allY);
  if (panel.kind === "bar") {
    xMin = 0;
  }
  yMin = Math.min(0, yMin);
  if (yMax === yMin) yMax = yMin + 1;
  if (xMax === xMin) xMax = xMin + 1;

  const sx = (v: number) => plotX + ((v - xMin) / (xMax - xMin)) * plotW;
  const sy = (v: number) => plotY + plotH - ((v - yMin) / (yMax - yMin)) * plotH;

  // gridlines + tick labels
  for (const tick of niceTicks(yMin, yMax)) {
    const y = round2(sy(tick));
    ops.push({ op: "line", x1: plotX, y1: y, x2: plotX + plotW, y2: y, stroke: GRID, width: 1 });
    ops.push({
      op: "text", x: plotX - 8, y: y + 4, text: formatTick(tick), size: 11,
      color: TEXT, anchor: "end",
    });
  }
  for (const tick of niceTicks(xMin, xMax, 6)) {
    const x = round2(sx(tick));
    ops.push({
      op: "line", x1: x, y1: plotY + plotH, x2: x, y2: plotY + plotH + 4,
      stroke: AXIS, width: 1,
    });
    ops.push({
      op: "text", x, y: plotY + plotH + 18, text: formatTick(tick), size: 11,
      color: TEXT, anchor: "middle",
    });
  }

  // axes
  ops.push({ op: "line", x1: plotX, y1: plotY, x2: plotX, y2: plotY + plotH, stroke: AXIS, width: 1 });
  ops.push({
    op: "line", x1: plotX, y1: plotY + plotH, x2: plotX + plotW, y2: plotY + plotH,
    stroke: AXIS, width: 1,
  });

  // series
  for (const series of panel.series) {
    if (panel.kind === "bar") {
      const widths = series.x.map((x, i) => (i === 0 ? x - xMin : x - series.x[i - 1]));
      for (let i = 0; i < series.x.length; i++) {
        const x0 = sx(series.x[i] - widths[i]);
        const x1 = sx(series.x[i]);
        const yTop = sy(series.y[i]);
        ops.push({
          op: "rect", x: round2(x0 + 1), y: round2(yTop),
          w: round2(Math.max(1, x1 - x0 - 2)), h: round2(plotY + plotH - yTop),
          fill: series.color,
        });
      }
    } else {
      const points = series.x.map(
        (x, i) => [round2(sx(x)), round2(sy(series.y[i]))] as [number, number],
      );
      ops.push({ op: "polyline", points, stroke: series.color, width: 2 });
    }
  }

  // labels and legend
  const title = panel.title;
  if (title) {
    ops.push({
      op: "text", x: plotX + plotW / 2, y: yOffset + 20, text: title, size: 13,
      color: TEXT, anchor: "middle",
    });
  }
  ops.push({
    op: "text", x: plotX + plotW / 2, y: plotY + plotH + 38, text: panel.xLabel,
    size: 12, color: TEXT, anchor: "middle",
  });
  ops.push({
    op: "text", x: xOffset + 14, y: plotY - 10, text: panel.yLabel, size: 12,
    color: TEXT, anchor: "start",
  });
  if (panel.series.length > 1) {
    let lx = plotX + plotW - 150;
    const ly = plotY + 8;
    for (const [i, series] of panel.series.entries()) {
      const y = ly + i * 16;
      ops.push({ op: "line", x1: lx, y1: y, x2: lx + 22, y2: y, stroke: series.color, width: 3 });
      ops.push({
        op: "text", x: lx + 28, y: y + 4, text: series.label, size: 11,
        color: TEXT, anchor: "start",
      });
    }
  }
  return ops;
}

export function buildScene(figure: Figure): Scene {
  const height = figure.panels.length * PANEL_H + 30;
  const ops: DrawOp[] = [];
  ops.push({
    op: "text", x: PANEL_W / 2, y: 22, text: figure.title, size: 15,
    color: TEXT, anchor: "middle",
  });
  figure.panels.forEach((panel, i) => {
    ops.push(...panelOps(panel, 0, 30 + i * PANEL_H));
  });
  return { width: PANEL_W, height, background: "#ffffff", ops };
}
