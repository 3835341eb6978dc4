#!/usr/bin/env node
/**
 * FER curve plotter for simulator CSV output.
 *
 * Usage:
 *   polarkern-plot --out fig.svg series1.csv:Label1 [series2.csv:Label2 ...]
 *                  [--ymin 1e-6] [--ymax 1] [--title TEXT]
 *
 * Zero-FER points cannot appear on a log axis; they are dropped with a
 * warning rather than clamped.  Exit codes: 0 ok, 1 usage, 2 data error.
 */

import { readFileSync, writeFileSync } from "fs";
import * as path from "path";

import { parseResultCsv, SchemaError } from "./csv";
import { renderFigure, SeriesData } from "./figure";

interface Args {
  out: string;
  series: Array<{ file: string; label: string }>;
  yMin?: number;
  yMax?: number;
  title?: string;
}

function usage(msg?: string): never {
  if (msg) console.error(`error: ${msg}`);
  console.error(
    "usage: polarkern-plot --out FIG.svg SERIES.csv:LABEL [...] " +
      "[--ymin Y] [--ymax Y] [--title TEXT]"
  );
  process.exit(1);
}

function parseArgs(argv: string[]): Args {
  const args: Args = { out: "", series: [] };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--out") {
      args.out = argv[++i] ?? usage("--out needs a value");
    } else if (a === "--ymin") {
      args.yMin = Number(argv[++i]);
      if (!(args.yMin > 0)) usage("--ymin must be positive");
    } else if (a === "--ymax") {
      args.yMax = Number(argv[++i]);
      if (!(args.yMax! > 0)) usage("--ymax must be positive");
    } else if (a === "--title") {
      args.title = argv[++i] ?? usage("--title needs a value");
    } else if (a.startsWith("--")) {
      usage(`unknown option ${a}`);
    } else {
      const sep = a.lastIndexOf(":");
      if (sep > 1) {
        args.series.push({ file: a.slice(0, sep), label: a.slice(sep + 1) });
      } else {
        args.series.push({ file: a, label: path.basename(a, ".csv") });
      }
    }
  }
  if (!args.out) usage("missing --out");
  if (args.series.length === 0) usage("no input series given");
  return args;
}

export function buildSeries(
  inputs: Array<{ file: string; label: string }>,
  warn: (msg: string) => void = (m) => console.error(m)
): SeriesData[] {
  return inputs.map(({ file, label }) => {
    const rows = parseResultCsv(readFileSync(file, "utf-8"), file);
    const points: SeriesData["points"] = [];
    for (const r of rows) {
      if (r.fer <= 0) {
        warn(
          `warning: ${file}: dropping snr=${r.snr_db} dB (FER 0 has no ` +
            "place on a log axis)"
        );
        continue;
      }
      points.push({ snr: r.snr_db, fer: r.fer });
    }
    return { label, points };
  });
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  try {
    const series = buildSeries(args.series);
    const svg = renderFigure(series, {
      yMin: args.yMin,
      yMax: args.yMax,
      title: args.title,
    });
    writeFileSync(args.out, svg);
    console.error(`wrote ${args.out}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError || (e as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(e as Error).message}`);
      return 2;
    }
    if (e instanceof Error) {
      console.error(`error: ${e.message}`);
      return 2;
    }
    throw e;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
