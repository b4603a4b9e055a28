#!/usr/bin/env node
/** report: render figures from an april-sim run directory.
 *
 * Usage:
 *   report --run DIR [--baseline DIR] --figures all|LIST --out DIR
 *
 * LIST is a comma-separated subset of:
 *   length_hist, throughput_curve, offpolicy_curve, std_curves, reward_curve
 * Each figure is written as both .svg and .png; re-rendering the same inputs
 * produces identical bytes.
 */

import * as fs from "fs";
import * as path from "path";

import { buildScene } from "./chart";
import { InputError, RunData, loadRunDir } from "./data";
import { FIGURE_KINDS, FigureKind, buildFigure } from "./figures";
import { renderPng } from "./png";
import { renderSvg } from "./svg";

export interface CliArgs {
  run: string;
  baseline: string | null;
  figures: FigureKind[];
  out: string;
}

export function parseArgs(argv: string[]): CliArgs {
  let run: string | null = null;
  let baseline: string | null = null;
  let out: string | null = null;
  let figures = "all";
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new InputError(`flag ${arg} needs a value`);
      return argv[i];
    };
    if (arg === "--run") run = next();
    else if (arg === "--baseline") baseline = next();
    else if (arg === "--figures") figures = next();
    else if (arg === "--out") out = next();
    else throw new InputError(`unknown flag: ${arg}`);
  }
  if (!run) throw new InputError("--run DIR is required");
  if (!out) throw new InputError("--out DIR is required");
  const kinds =
    figures === "all"
      ? [...FIGURE_KINDS]
      : figures.split(",").map((name) => {
          const kind = name.trim() as FigureKind;
          if (!FIGURE_KINDS.includes(kind)) {
            throw new InputError(`unknown figure kind: ${name.trim()}`);
          }
          return kind;
        });
  return { run, baseline, figures: kinds, out };
}

export function renderFigures(args: CliArgs): string[] {
  const needHistogram = args.figures.includes("length_hist");
  const run = loadRunDir(args.run, needHistogram);
  const baseline: RunData | null = args.baseline
    ? loadRunDir(args.baseline, false)
    : null;
  fs.mkdirSync(args.out, { recursive: true });
  const written: string[] = [];
  for (const kind of args.figures) {
    const figure = buildFigure(kind, run, baseline);
    const scene = buildScene(figure);
    const svgPath = path.join(args.out, `${kind}.svg`);
    const pngPath = path.join(args.out, `${kind}.png`);
    fs.writeFileSync(svgPath, renderSvg(scene));
    fs.writeFileSync(pngPath, renderPng(scene));
    written.push(svgPath, pngPath);
  }
  return written;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const written = renderFigures(args);
    for (const file of written) {
      console.log(`wrote ${file}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof InputError || err instanceof Error) {
      console.error(`report: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
