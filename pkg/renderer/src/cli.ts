/**
 * crprobe-render: turn crprobe JSON artifacts into SVG files.
 *
 * Usage: crprobe-render <figure-spec.json> [...more specs]
 *
 * A figure spec is JSON: {"kind", "input", "output", "title"?}. Exit codes
 * follow the pipeline's convention: 0 success, 2 bad spec/usage, 3 bad input
 * data (unreadable, malformed, or schema-mismatched JSON).
 */

import * as fs from "fs";
import * as path from "path";

import { FIGURE_KINDS, FigureKind, FigureSpec, renderFigure } from "./figures";
import { SchemaError } from "./schemas";

export const EXIT_OK = 0;
export const EXIT_SPEC = 2;
export const EXIT_DATA = 3;

class SpecError extends Error {}

function loadSpec(specPath: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(specPath, "utf-8"));
  } catch (err) {
    throw new SpecError(`${specPath}: unreadable figure spec (${(err as Error).message})`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new SpecError(`${specPath}: figure spec must be a JSON object`);
  }
  const record = raw as Record<string, unknown>;
  const kind = record.kind;
  if (typeof kind !== "string" || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new SpecError(
      `${specPath}: "kind" must be one of ${FIGURE_KINDS.join(", ")}`,
    );
  }
  if (typeof record.input !== "string" || typeof record.output !== "string") {
    throw new SpecError(`${specPath}: "input" and "output" must be file paths`);
  }
  if (record.title !== undefined && typeof record.title !== "string") {
    throw new SpecError(`${specPath}: "title" must be a string when present`);
  }
  const base = path.dirname(path.resolve(specPath));
  return {
    kind: kind as FigureKind,
    input: path.resolve(base, record.input),
    output: path.resolve(base, record.output),
    title: record.title as string | undefined,
  };
}

export function runSpec(spec: FigureSpec): void {
  let payload: unknown;
  try {
    payload = JSON.parse(fs.readFileSync(spec.input, "utf-8"));
  } catch (err) {
    throw new SchemaError("$", `${spec.input}: ${(err as Error).message}`);
  }
  const rendered = renderFigure(spec.kind, payload, spec.title);
  fs.writeFileSync(spec.output, rendered, "utf-8");
}

export function main(argv: string[]): number {
  const args = argv.filter((a) => a !== "--");
  if (args.length === 0 || args.includes("--help") || args.includes("-h")) {
    process.stderr.write(
      "usage: crprobe-render <figure-spec.json> [...more specs]\n" +
        `figure kinds: ${FIGURE_KINDS.join(", ")}\n`,
    );
    return args.length === 0 ? EXIT_SPEC : EXIT_OK;
  }
  for (const specPath of args) {
    let spec: FigureSpec;
    try {
      spec = loadSpec(specPath);
    } catch (err) {
      process.stderr.write(`spec error: ${(err as Error).message}\n`);
      return EXIT_SPEC;
    }
    try {
      runSpec(spec);
      process.stderr.write(`rendered ${spec.output}\n`);
    } catch (err) {
      if (err instanceof SchemaError) {
        process.stderr.write(`input error in ${spec.input}: ${err.message}\n`);
        return EXIT_DATA;
      }
      throw err;
    }
  }
  return EXIT_OK;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
