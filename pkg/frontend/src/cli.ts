/**
 * Shared argv handling for the figure scripts: `--in <csv>` (repeatable
 * where the figure accepts several inputs) and `--out <svg>`.
 */

import * as fs from "fs";
import * as path from "path";

import { SchemaError } from "./csv.js";
import { FIGURES } from "./figures.js";

export function runFigure(kind: string, argv: string[]): number {
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") inputs.push(argv[++i]);
    else if (argv[i] === "--out") out = argv[++i];
    else {
      process.stderr.write(`error: unknown argument '${argv[i]}'\n`);
      return 2;
    }
  }
  if (inputs.length === 0 || !out) {
    process.stderr.write(`usage: ${kind} --in <csv> [--in <csv>...] ` +
                         `--out <svg>\n`);
    return 2;
  }
  const render = FIGURES[kind];
  try {
    const svg = render(inputs);
    fs.mkdirSync(path.dirname(path.resolve(out)), { recursive: true });
    fs.writeFileSync(out, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    if (err instanceof Error && "code" in err) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  return 0;
}
