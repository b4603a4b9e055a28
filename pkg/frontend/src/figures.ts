/** Figure construction: turns run data into panels of labeled series. */

import { RunData } from "./data";

export const FIGURE_KINDS = [
  "length_hist",
  "throughput_curve",
  "offpolicy_curve",
  "std_curves",
  "reward_curve",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
}

export interface Panel {
  title: string;
  xLabel: string;
  yLabel: string;
  kind: "line" | "bar";
  series: Series[];
}

export interface Figure {
  kind: FigureKind;
  title: string;
  panels: Panel[];
}

export interface FigureSpec {
  kind: FigureKind;
  runDir: string;
  baselineDir: string | null;
  outDir: string;
}

const RUN_COLOR = "#0e7fa8"; // cyan-ish: the partial-rollout run
const BASE_COLOR = "#e0922f"; // orange-ish: the baseline overlay

function curve(
  run: RunData,
  baseline: RunData | null,
  field: (r: RunData["steps"][number]) => number,
  label: string,
): Series[] {
  const series: Series[] = [
    { label: "run", x: run.steps.map((s) => s.step), y: run.steps.map(field), color: RUN_COLOR },
  ];
  if (baseline) {
    series.push({
      label: "baseline",
      x: baseline.steps.map((s) => s.step),
      y: baseline.steps.map(field),
      color: BASE_COLOR,
    });
  }
  return series.map((s) => ({ ...s, label: s.label === "run" ? label : s.label }));
}

export function buildFigure(kind: FigureKind, run: RunData, baseline: RunData | null): Figure {
  switch (kind) {
    case "length_hist": {
      if (!run.histogram) {
        throw new Error("length_hist needs histogram.csv in the run directory");
      }
      const xs = run.histogram.map((b) => b.binUpper);
      const ys = run.histogram.map((b) => b.mass);
      return {
        kind,
        title: "Response length distribution",
        panels: [
          {
            title: "",
            xLabel: "response length (tokens, bin upper edge)",
            yLabel: "probability mass",
            kind: "bar",
            series: [{ label: "mass", x: xs, y: ys, color: RUN_COLOR }],
          },
        ],
      };
    }
    case "throughput_curve":
      return {
        kind,
        title: "Rollout throughput per step",
        panels: [
          {
            title: "",
            xLabel: "step",
            yLabel: "tokens per second",
            kind: "line",
            series: curve(run, baseline, (s) => s.throughput, "run"),
          },
        ],
      };
    case "offpolicy_curve":
      return {
        kind,
        title: "Off-policy token fraction per step",
        panels: [
          {
            title: "",
            xLabel: "step",
            yLabel: "fraction of batch tokens",
            kind: "line",
            series: curve(run, baseline, (s) => s.offpolicy_fraction, "run"),
          },
        ],
      };
    case "std_curves":
      return {
        kind,
        title: "Response length std per step",
        panels: [
          {
            title: "batch level",
            xLabel: "step",
            yLabel: "sigma_batch (tokens)",
            kind: "line",
            series: curve(run, baseline, (s) => s.sigma_batch, "run"),
          },
          {
            title: "instance level",
            xLabel: "step",
            yLabel: "sigma_instance (tokens)",
            kind: "line",
            series: curve(run, baseline, (s) => s.sigma_instance, "run"),
          },
        ],
      };
    case "reward_curve":
      return {
        kind,
        title: "Mean batch reward per step",
        panels: [
          {
            title: "",
            xLabel: "step",
            yLabel: "mean reward",
            kind: "line",
            series: curve(run, baseline, (s) => s.mean_reward, "run"),
          },
        ],
      };
  }
}
