/**
 * Typed readers for the crprobe JSON artifacts.
 *
 * Every reader checks the `schema` tag and the fields it needs, reporting the
 * failing field path so a bad input dies with a usable message instead of a
 * blank chart.
 */

export class SchemaError extends Error {
  constructor(public readonly path: string, detail: string) {
    super(`${path}: ${detail}`);
    this.name = "SchemaError";
  }
}

export const PAIR_CLASSES = "crprobe.pair_classes/1";
export const LABEL_CR = "crprobe.label_cr/1";
export const PURE_COUNTS = "crprobe.pure_counts/1";
export const DIRECT_INDIRECT = "crprobe.direct_indirect/1";
export const COOC_FREQ = "crprobe.cooc_freq/1";
export const PREDICTION_CR = "crprobe.prediction_cr/1";
export const METRICS = "crprobe.metrics/1";

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function asRecord(value: unknown, path: string): Record<string, unknown> {
  if (!isRecord(value)) throw new SchemaError(path, "expected an object");
  return value;
}

function asNumber(value: unknown, path: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SchemaError(path, "expected a finite number");
  }
  return value;
}

function asString(value: unknown, path: string): string {
  if (typeof value !== "string") throw new SchemaError(path, "expected a string");
  return value;
}

function asArray(value: unknown, path: string): unknown[] {
  if (!Array.isArray(value)) throw new SchemaError(path, "expected an array");
  return value;
}

export function schemaOf(raw: unknown): string {
  const root = asRecord(raw, "$");
  return asString(root.schema, "$.schema");
}

function expectSchema(raw: unknown, allowed: string[]): Record<string, unknown> {
  const root = asRecord(raw, "$");
  const schema = asString(root.schema, "$.schema");
  if (!allowed.includes(schema)) {
    throw new SchemaError("$.schema", `expected one of [${allowed.join(", ")}], got "${schema}"`);
  }
  return root;
}

function numberMap(value: unknown, path: string): Record<string, number> {
  const record = asRecord(value, path);
  const out: Record<string, number> = {};
  for (const key of Object.keys(record)) {
    out[key] = asNumber(record[key], `${path}.${key}`);
  }
  return out;
}

export interface ClassDistribution {
  source: string;
  counts: Record<string, number>;
  note: string;
}

/** pair_classes, label_cr, pure_counts, and direct_indirect all reduce to name -> count. */
export function readClassDistribution(raw: unknown): ClassDistribution {
  const root = expectSchema(raw, [PAIR_CLASSES, LABEL_CR, PURE_COUNTS, DIRECT_INDIRECT]);
  const schema = root.schema as string;
  if (schema === PAIR_CLASSES) {
    return {
      source: schema,
      counts: numberMap(root.classes, "$.classes"),
      note: `${asNumber(root.total_pairs, "$.total_pairs")} item pairs`,
    };
  }
  if (schema === LABEL_CR) {
    return {
      source: schema,
      counts: numberMap(root.classes, "$.classes"),
      note: `${asNumber(root.samples, "$.samples")} samples`,
    };
  }
  if (schema === PURE_COUNTS) {
    return {
      source: schema,
      counts: numberMap(root.slices, "$.slices"),
      note: `${asNumber(root.samples, "$.samples")} samples`,
    };
  }
  return {
    source: schema,
    counts: {
      direct: asNumber(root.direct, "$.direct"),
      indirect: asNumber(root.indirect, "$.indirect"),
    },
    note: `${asNumber(root.samples, "$.samples")} samples`,
  };
}

export interface FrequencyHistogram {
  buckets: Array<[number, number]>;
  edges: number;
}

export function readFrequencyHistogram(raw: unknown): FrequencyHistogram {
  const root = expectSchema(raw, [COOC_FREQ]);
  const rows = asArray(root.buckets, "$.buckets");
  const buckets: Array<[number, number]> = rows.map((row, i) => {
    const pair = asArray(row, `$.buckets[${i}]`);
    if (pair.length !== 2) throw new SchemaError(`$.buckets[${i}]`, "expected [frequency, count]");
    return [asNumber(pair[0], `$.buckets[${i}][0]`), asNumber(pair[1], `$.buckets[${i}][1]`)];
  });
  return { buckets, edges: asNumber(root.edges, "$.edges") };
}

export interface ProportionReport {
  proportions: Record<string, number>;
  mode: string;
  observations: number;
}

export function readProportions(raw: unknown): ProportionReport {
  const root = expectSchema(raw, [PREDICTION_CR]);
  return {
    proportions: numberMap(root.proportions, "$.proportions"),
    mode: asString(root.mode, "$.mode"),
    observations: asNumber(root.observations, "$.observations"),
  };
}

export interface SliceMetrics {
  name: string;
  n: number;
  prec: number | null;
  mrr: number | null;
}

export interface MetricsReport {
  model: string;
  dataset: string;
  k: number;
  slices: SliceMetrics[];
}

export function readMetrics(raw: unknown): MetricsReport {
  const root = expectSchema(raw, [METRICS]);
  const rows = asArray(root.slices, "$.slices");
  const slices = rows.map((row, i) => {
    const record = asRecord(row, `$.slices[${i}]`);
    const prec = record.prec_at_k;
    const mrr = record.mrr_at_k;
    return {
      name: asString(record.name, `$.slices[${i}].name`),
      n: asNumber(record.n, `$.slices[${i}].n`),
      prec: prec === null ? null : asNumber(prec, `$.slices[${i}].prec_at_k`),
      mrr: mrr === null ? null : asNumber(mrr, `$.slices[${i}].mrr_at_k`),
    };
  });
  return {
    model: asString(root.model, "$.model"),
    dataset: asString(root.dataset, "$.dataset"),
    k: asNumber(root.k, "$.k"),
    slices,
  };
}

const HOP_PATTERN = /^hop(\d+)$/;

/** Canonical class order: hop0 < hop1 < ... < others < none < anything else. */
export function classOrder(name: string): [number, number, string] {
  const hop = HOP_PATTERN.exec(name);
  if (hop) return [0, parseInt(hop[1], 10), name];
  if (name === "others") return [1, 0, name];
  if (name === "none") return [2, 0, name];
  return [3, 0, name];
}

export function sortedClassNames(counts: Record<string, number>): string[] {
  const names = Object.keys(counts);
  const classLike = names.every((n) => classOrder(n)[0] < 3);
  if (!classLike) return names; // partition slices keep their emitted order
  return names.sort((a, b) => {
    const [ga, ha] = classOrder(a);
    const [gb, hb] = classOrder(b);
    return ga - gb || ha - hb || a.localeCompare(b);
  });
}
