/**
 * Stable colors: a relation class gets the same fill on every figure kind,
 * in every run. Names without a reserved color draw from a fixed cycle in
 * their render order.
 */

const CLASS_COLORS: Record<string, string> = {
  hop0: "#4c72b0",
  hop1: "#dd8452",
  hop2: "#55a868",
  hop3: "#c44e52",
  hop4: "#8172b3",
  hop5: "#937860",
  others: "#8c8c8c",
  none: "#bcbcbc",
  direct: "#4c72b0",
  indirect: "#dd8452",
  "pure-0": "#4c72b0",
  "pure-1": "#dd8452",
  "pure-2": "#55a868",
};

const FALLBACK_CYCLE = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

export function colorFor(name: string, index: number): string {
  return CLASS_COLORS[name] ?? FALLBACK_CYCLE[index % FALLBACK_CYCLE.length];
}

export const METRIC_COLORS: Record<string, string> = {
  prec: "#4c72b0",
  mrr: "#dd8452",
};
