/** Loaders for april-sim run artifacts: steps.jsonl, summary.json, histogram.csv. */

import * as fs from "fs";
import * as path from "path";

export interface StepReport {
  step: number;
  tokens_generated: number;
  rollout_wall_time: number;
  train_wall_time: number;
  throughput: number;
  idle_fraction: number;
  completed_groups: number;
  carried_in_tokens: number;
  offpolicy_fraction: number;
  offpolicy_sample_fraction: number;
  staleness_histogram: Record<string, number>;
  sigma_batch: number;
  sigma_instance: number;
  mean_reward: number;
  buffer_size_after: number;
}

export interface HistogramBin {
  binUpper: number;
  count: number | null;
  mass: number;
}

export interface RunData {
  dir: string;
  steps: StepReport[];
  summary: Record<string, unknown> | null;
  histogram: HistogramBin[] | null;
}

export class InputError extends Error {}

function readText(file: string): string {
  if (!fs.existsSync(file)) {
    throw new InputError(`missing input file: ${file}`);
  }
  return fs.readFileSync(file, "utf-8");
}

const NUMERIC_FIELDS: (keyof StepReport)[] = [
  "step",
  "tokens_generated",
  "rollout_wall_time",
  "throughput",
  "offpolicy_fraction",
  "offpolicy_sample_fraction",
  "sigma_batch",
  "sigma_instance",
  "mean_reward",
];

export function loadSteps(file: string): StepReport[] {
  const lines = readText(file)
    .split("\n")
    .filter((line) => line.trim().length > 0);
  const steps: StepReport[] = [];
  for (const [i, line] of lines.entries()) {
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      throw new InputError(`corrupt JSONL at ${file}:${i + 1}: ${(err as Error).message}`);
    }
    const record = parsed as StepReport;
    for (const field of NUMERIC_FIELDS) {
      if (typeof record[field] !== "number" || !Number.isFinite(record[field] as number)) {
        throw new InputError(`corrupt record at ${file}:${i + 1}: bad field ${String(field)}`);
      }
    }
    steps.push(record);
  }
  return steps;
}

export function loadSummary(file: string): Record<string, unknown> {
  try {
    return JSON.parse(readText(file)) as Record<string, unknown>;
  } catch (err) {
    if (err instanceof InputError) throw err;
    throw new InputError(`corrupt JSON at ${file}: ${(err as Error).message}`);
  }
}

/** histogram.csv carries bin_upper plus mass (and optionally count). */
export function loadHistogramCsv(file: string): HistogramBin[] {
  const lines = readText(file).split("\n").filter((l) => l.trim().length > 0);
  if (lines.length < 2) {
    throw new InputError(`corrupt histogram at ${file}: no data rows`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const upperIdx = header.indexOf("bin_upper");
  const massIdx = header.indexOf("mass");
  const countIdx = header.indexOf("count");
  if (upperIdx < 0 || massIdx < 0) {
    throw new InputError(`corrupt histogram at ${file}: expected bin_upper,mass columns`);
  }
  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    const binUpper = Number(cells[upperIdx]);
    const mass = Number(cells[massIdx]);
    if (!Number.isFinite(binUpper) || !Number.isFinite(mass)) {
      throw new InputError(`corrupt histogram at ${file}: row ${i + 2}`);
    }
    return {
      binUpper,
      mass,
      count: countIdx >= 0 ? Number(cells[countIdx]) : null,
    };
  });
}

/** Load a run directory; the histogram is optional (only length_hist needs it). */
export function loadRunDir(dir: string, needHistogram: boolean): RunData {
  const stepsFile = path.join(dir, "steps.jsonl");
  const summaryFile = path.join(dir, "summary.json");
  const histFile = path.join(dir, "histogram.csv");
  return {
    dir,
    steps: loadSteps(stepsFile),
    summary: fs.existsSync(summaryFile) ? loadSummary(summaryFile) : null,
    histogram: needHistogram || fs.existsSync(histFile) ? loadHistogramCsv(histFile) : null,
  };
}
