// ── figures command-line interface ──
//
//   figures <kind> --in PATH[,PATH…] --out PATH [--png]
//
// kinds: cvar_trace, lambda_sweep, stage_performance
//
// Exit codes: 0 success, 2 usage error (bad arguments), 1 data error
// (unreadable input, missing columns, malformed values).

import { mkdirSync, readFileSync, realpathSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";
import {
  buildCvarTrace,
  buildLambdaSweep,
  buildStagePerformance,
  methodFromFilename,
  readStageSeries,
  readSweepRows,
  readTraceRows,
} from "./charts.js";
import { DataError, parseCsv } from "./csv.js";
import { renderPng } from "./png.js";
import { Scene, renderSvg } from "./svg.js";

export class UsageError extends Error {}

const KINDS = ["cvar_trace", "lambda_sweep", "stage_performance"] as const;
type Kind = (typeof KINDS)[number];

const USAGE = [
  "usage: figures <kind> --in PATH[,PATH...] --out PATH [--png]",
  "",
  "kinds:",
  "  cvar_trace         per-arm true-CVaR panels from one trace CSV",
  "                     (stage, arm, true_cvar, is_optimal)",
  "  lambda_sweep       three final-metric panels from one sweep CSV",
  "                     (method, lambda, hit_rate_T, avg_regret_T, empirical_cvar_T)",
  "  stage_performance  three per-stage panels from one aggregate CSV per method",
  "                     (stage, hit_rate, avg_regret, empirical_cvar)",
  "",
  "options:",
  "  --in PATH[,PATH...]  input CSV path(s); stage_performance accepts several",
  "  --out PATH           output image path",
  "  --png                write a PNG raster instead of SVG",
].join("\n");

function readTable(path: string) {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (error) {
    throw new DataError(`cannot read '${path}': ${(error as Error).message}`);
  }
  return parseCsv(text, path);
}

export function buildScene(kind: Kind, paths: string[]): Scene {
  if (kind === "cvar_trace") {
    if (paths.length !== 1) {
      throw new UsageError("cvar_trace takes exactly one input CSV");
    }
    return buildCvarTrace(readTraceRows(readTable(paths[0] as string)));
  }
  if (kind === "lambda_sweep") {
    if (paths.length !== 1) {
      throw new UsageError("lambda_sweep takes exactly one input CSV");
    }
    return buildLambdaSweep(readSweepRows(readTable(paths[0] as string)));
  }
  const series = paths.map((path) =>
    readStageSeries(readTable(path), methodFromFilename(path)),
  );
  return buildStagePerformance(series);
}

export function runCli(argv: string[]): number {
  try {
    const { positionals, values } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        png: { type: "boolean", default: false },
        help: { type: "boolean", short: "h", default: false },
      },
    });
    if (values.help) {
      console.log(USAGE);
      return 0;
    }
    if (positionals.length !== 1) {
      throw new UsageError("expected exactly one figure kind");
    }
    const kind = positionals[0] as string;
    if (!(KINDS as readonly string[]).includes(kind)) {
      throw new UsageError(`unknown figure kind '${kind}'`);
    }
    if (values.in === undefined) {
      throw new UsageError("--in is required");
    }
    if (values.out === undefined) {
      throw new UsageError("--out is required");
    }
    const paths = values.in
      .split(",")
      .map((path) => path.trim())
      .filter((path) => path !== "");
    if (paths.length === 0) {
      throw new UsageError("--in requires at least one path");
    }

    const scene = buildScene(kind as Kind, paths);
    mkdirSync(dirname(resolve(values.out)), { recursive: true });
    if (values.png) {
      writeFileSync(values.out, renderPng(scene));
    } else {
      writeFileSync(values.out, renderSvg(scene), "utf8");
    }
    return 0;
  } catch (error) {
    const code = (error as NodeJS.ErrnoException).code;
    if (error instanceof UsageError || (typeof code === "string" && code.startsWith("ERR_PARSE_ARGS"))) {
      console.error(`error: ${(error as Error).message}`);
      console.error(USAGE);
      return 2;
    }
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
}

// Run only when invoked as a script (npm bin symlinks resolve to this file).
const invokedAs = process.argv[1];
if (invokedAs !== undefined) {
  let isEntry = false;
  try {
    isEntry = realpathSync(invokedAs) === fileURLToPath(import.meta.url);
  } catch {
    isEntry = false;
  }
  if (isEntry) {
    process.exit(runCli(process.argv.slice(2)));
  }
}
