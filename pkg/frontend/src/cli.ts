/**
 * Command line front door: `plot --kind acc-vs-time --in 'runs/*.rounds.csv'
 * --out fig.svg`. Globs are expanded and sorted so the same invocation always
 * sees its inputs in the same order.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import { parseArgs } from "node:util";

import fg from "fast-glob";

import { FIGURE_KINDS, render, SchemaError, type FigureKind } from "./index.js";

const KIND_ALIASES: Record<string, FigureKind> = {
  "acc-vs-round": "AccVsRound",
  "acc-vs-time": "AccVsTime",
  "latency-hist": "LatencyHist",
  "class-dist": "ClassDist",
};
for (const kind of FIGURE_KINDS) KIND_ALIASES[kind] = kind;

const USAGE = `usage: plot --kind <kind> --in <glob> [--in <glob> ...] --out <file.svg> [--window N]

kinds: ${Object.keys(KIND_ALIASES).filter((k) => k.includes("-")).join(", ")}
  --window N   moving-average window in rounds for accuracy curves (default 5)`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        window: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
      allowPositionals: false,
    });
  } catch (err) {
    console.error(`plot: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  const { values } = parsed;

  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.kind || !values.in || values.in.length === 0 || !values.out) {
    console.error("plot: --kind, --in and --out are required");
    console.error(USAGE);
    return 2;
  }

  const kind = KIND_ALIASES[values.kind];
  if (!kind) {
    console.error(`plot: unknown kind ${JSON.stringify(values.kind)}`);
    console.error(USAGE);
    return 2;
  }

  const window = values.window === undefined ? 5 : Number(values.window);
  if (!Number.isInteger(window) || window < 1) {
    console.error(`plot: --window must be a positive integer, got ${values.window}`);
    return 2;
  }

  const inputs = fg.sync(values.in, { dot: false }).sort();
  if (inputs.length === 0) {
    console.error(`plot: no files match ${values.in.join(", ")}`);
    return 2;
  }

  let svg: string;
  try {
    svg = render({ kind, inputs, window, outPath: values.out });
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`plot: ${err.message}`);
      return 2;
    }
    throw err;
  }

  mkdirSync(dirname(values.out) || ".", { recursive: true });
  writeFileSync(values.out, svg, "utf8");
  console.log(`wrote ${values.out} (${inputs.length} input${inputs.length === 1 ? "" : "s"})`);
  return 0;
}
