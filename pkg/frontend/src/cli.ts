#!/usr/bin/env node
/** Figure generation from run directories.
 *
 * Usage:
 *   plot --kind mmd_curve --runs runA,runB --out curves.svg [--log-y]
 *   plot --kind hist2d    --runs runA      --out hist.svg   [--bins 48] [--range 18] [--seed 0]
 *   plot --kind poc_slope --runs pocRun    --out slope.svg
 *
 * Reads only manifest.json and the CSV/JSON files named by the run contract;
 * writes only the requested output file.
 */

import { writeFileSync } from "fs";

import { plotHist2d } from "./hist2d.js";
import { plotMmdCurves } from "./mmdCurve.js";
import { plotPocSlope } from "./pocSlope.js";

interface Args {
  kind: string;
  runs: string[];
  out: string;
  logY: boolean;
  bins?: number;
  range?: number;
  seed?: number;
}

export function parseArgs(argv: string[]): Args {
  const args: Partial<Args> = { logY: false };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case "--kind":
        args.kind = argv[++i];
        break;
      case "--runs":
        args.runs = argv[++i].split(",").filter((s) => s.length > 0);
        break;
      case "--out":
        args.out = argv[++i];
        break;
      case "--log-y":
        args.logY = true;
        break;
      case "--bins":
        args.bins = Number(argv[++i]);
        break;
      case "--range":
        args.range = Number(argv[++i]);
        break;
      case "--seed":
        args.seed = Number(argv[++i]);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.kind || !args.runs || args.runs.length === 0 || !args.out) {
    throw new Error("required: --kind <mmd_curve|hist2d|poc_slope> --runs <dirs> --out <file>");
  }
  return args as Args;
}

export function run(args: Args): void {
  let svg: string;
  switch (args.kind) {
    case "mmd_curve":
      svg = plotMmdCurves(args.runs, { logY: args.logY });
      break;
    case "hist2d":
      svg = plotHist2d(args.runs[0], { bins: args.bins, range: args.range, seed: args.seed });
      break;
    case "poc_slope":
      svg = plotPocSlope(args.runs[0]);
      break;
    default:
      throw new Error(`unknown figure kind ${args.kind}`);
  }
  writeFileSync(args.out, svg);
}

const isMain = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (isMain) {
  try {
    run(parseArgs(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  }
}
