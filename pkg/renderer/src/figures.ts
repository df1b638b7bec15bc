/**
 * Figure kinds over the crprobe JSON artifacts.
 *
 * - class-distribution-bar: name -> count bars (pair classes, label relation
 *   mix, pure partition sizes, direct/indirect counts)
 * - per-slice-grouped-bar: Prec@k / MRR@k per evaluation slice
 * - frequency-histogram: log-scale co-occurrence frequency curve
 * - proportion-bar: relation shares inside audited predictions
 */

import { colorFor, METRIC_COLORS } from "./colors";
import {
  ClassDistribution,
  readClassDistribution,
  readFrequencyHistogram,
  readMetrics,
  readProportions,
  SchemaError,
  sortedClassNames,
} from "./schemas";
import * as svg from "./svg";

export const FIGURE_KINDS = [
  "class-distribution-bar",
  "per-slice-grouped-bar",
  "frequency-histogram",
  "proportion-bar",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  title?: string;
}

const plot = {
  x0: svg.MARGIN.left,
  y0: svg.MARGIN.top,
  width: svg.WIDTH - svg.MARGIN.left - svg.MARGIN.right,
  height: svg.HEIGHT - svg.MARGIN.top - svg.MARGIN.bottom,
  bottom: svg.HEIGHT - svg.MARGIN.bottom,
};

function axes(parts: string[], yTicks: svg.Tick[], toY: (v: number) => number, yCaption: string) {
  parts.push(svg.line(plot.x0, plot.y0, plot.x0, plot.bottom, "#444444"));
  parts.push(svg.line(plot.x0, plot.bottom, plot.x0 + plot.width, plot.bottom, "#444444"));
  for (const tick of yTicks) {
    const y = toY(tick.value);
    parts.push(svg.line(plot.x0 - 4, y, plot.x0, y, "#444444"));
    parts.push(svg.line(plot.x0, y, plot.x0 + plot.width, y, "#eeeeee"));
    parts.push(svg.label(plot.x0 - 8, y + 4, tick.text, { anchor: "end", size: 10 }));
  }
  parts.push(
    svg.label(18, plot.y0 + plot.height / 2, yCaption, { rotate: -90, size: 11, fill: "#444444" }),
  );
}

interface Bar {
  name: string;
  value: number;
  color: string;
  caption: string;
}

function simpleBars(
  parts: string[],
  bars: Bar[],
  maxValue: number,
  yCaption: string,
  percent: boolean,
) {
  const ticks = svg.linearTicks(maxValue);
  const top = ticks[ticks.length - 1].value || 1;
  const toY = (v: number) => plot.bottom - (v / top) * plot.height;
  axes(parts, ticks, toY, yCaption);
  const slot = plot.width / bars.length;
  const barWidth = Math.min(slot * 0.6, 90);
  bars.forEach((bar, i) => {
    const x = plot.x0 + slot * i + (slot - barWidth) / 2;
    const y = toY(bar.value);
    parts.push(svg.rect(x, y, barWidth, plot.bottom - y, bar.color));
    parts.push(svg.label(x + barWidth / 2, y - 5, bar.caption, { size: 10 }));
    parts.push(svg.label(plot.x0 + slot * i + slot / 2, plot.bottom + 16, bar.name, { size: 11 }));
  });
  void percent;
}

function renderClassDistribution(raw: unknown, heading?: string): string {
  const dist: ClassDistribution = readClassDistribution(raw);
  const names = sortedClassNames(dist.counts);
  const bars: Bar[] = names.map((name, i) => ({
    name,
    value: dist.counts[name],
    color: colorFor(name, i),
    caption: svg.fmt(dist.counts[name]),
  }));
  const maxValue = Math.max(...bars.map((b) => b.value), 0);
  const parts = [svg.openSvg(), svg.title(heading ?? "Relation class distribution")];
  parts.push(svg.subtitle(`${dist.source} | ${dist.note}`));
  simpleBars(parts, bars, maxValue, "pairs", false);
  parts.push(svg.closeSvg());
  return parts.join("");
}

function renderProportions(raw: unknown, heading?: string): string {
  const report = readProportions(raw);
  const names = sortedClassNames(report.proportions);
  const bars: Bar[] = names.map((name, i) => ({
    name,
    value: report.proportions[name] * 100,
    color: colorFor(name, i),
    caption: `${(report.proportions[name] * 100).toFixed(2)}%`,
  }));
  const parts = [svg.openSvg(), svg.title(heading ?? "Relation classes in predictions")];
  parts.push(svg.subtitle(`${report.mode} | ${svg.fmt(report.observations)} observations`));
  simpleBars(parts, bars, Math.max(...bars.map((b) => b.value), 1), "share (%)", true);
  parts.push(svg.closeSvg());
  return parts.join("");
}

function renderFrequencyHistogram(raw: unknown, heading?: string): string {
  const hist = readFrequencyHistogram(raw);
  if (hist.buckets.length === 0) {
    throw new SchemaError("$.buckets", "no buckets to plot");
  }
  const parts = [svg.openSvg(), svg.title(heading ?? "Co-occurrence frequency of direct pairs")];
  parts.push(svg.subtitle(`${svg.fmt(hist.edges)} direct pairs`));

  const maxCount = Math.max(...hist.buckets.map(([, c]) => c));
  const decades = Math.max(1, Math.ceil(Math.log10(maxCount + 1)));
  const toY = (count: number) =>
    plot.bottom - (Math.log10(count + 1) / decades) * plot.height;
  const ticks: svg.Tick[] = [];
  for (let d = 0; d <= decades; d++) {
    ticks.push({ value: Math.pow(10, d) - 1, text: d === 0 ? "0" : `1e${d}` });
  }
  axes(parts, ticks, toY, "pairs (log scale)", );

  const slot = plot.width / hist.buckets.length;
  const barWidth = Math.max(Math.min(slot * 0.8, 40), 1);
  hist.buckets.forEach(([freq, count], i) => {
    const x = plot.x0 + slot * i + (slot - barWidth) / 2;
    const y = toY(count);
    parts.push(svg.rect(x, y, barWidth, plot.bottom - y, colorFor("hop0", 0)));
    if (hist.buckets.length <= 24 || i % Math.ceil(hist.buckets.length / 24) === 0) {
      parts.push(svg.label(plot.x0 + slot * i + slot / 2, plot.bottom + 16, svg.fmt(freq), { size: 9 }));
    }
  });
  parts.push(svg.label(plot.x0 + plot.width / 2, plot.bottom + 34, "co-occurrence frequency", { size: 11, fill: "#444444" }));
  parts.push(svg.closeSvg());
  return parts.join("");
}

function renderSliceMetrics(raw: unknown, heading?: string): string {
  const report = readMetrics(raw);
  const slices = report.slices.filter((s) => s.prec !== null && s.mrr !== null);
  if (slices.length === 0) {
    throw new SchemaError("$.slices", "no slices with metrics to plot");
  }
  const parts = [
    svg.openSvg(),
    svg.title(heading ?? `${report.model} on ${report.dataset}`),
    svg.subtitle(`Prec@${svg.fmt(report.k)} and MRR@${svg.fmt(report.k)} per slice, percent`),
  ];
  const maxPct = Math.max(...slices.map((s) => Math.max(s.prec! * 100, s.mrr! * 100)), 1);
  const ticks = svg.linearTicks(maxPct);
  const top = ticks[ticks.length - 1].value || 1;
  const toY = (v: number) => plot.bottom - (v / top) * plot.height;
  axes(parts, ticks, toY, "percent");

  const slot = plot.width / slices.length;
  const barWidth = Math.min(slot * 0.3, 44);
  slices.forEach((slice, i) => {
    const center = plot.x0 + slot * i + slot / 2;
    const entries: Array<[string, number]> = [
      ["prec", slice.prec! * 100],
      ["mrr", slice.mrr! * 100],
    ];
    entries.forEach(([metric, value], j) => {
      const x = center - barWidth + j * barWidth;
      const y = toY(value);
      parts.push(svg.rect(x, y, barWidth - 2, plot.bottom - y, METRIC_COLORS[metric]));
      parts.push(svg.label(x + barWidth / 2 - 1, y - 4, value.toFixed(2), { size: 8 }));
    });
    parts.push(svg.label(center, plot.bottom + 16, slice.name, { size: 10 }));
    parts.push(svg.label(center, plot.bottom + 30, `n=${svg.fmt(slice.n)}`, { size: 9, fill: "#777777" }));
  });
  // legend
  const legendX = plot.x0 + plot.width - 150;
  parts.push(svg.rect(legendX, plot.y0 + 4, 12, 12, METRIC_COLORS.prec));
  parts.push(svg.label(legendX + 18, plot.y0 + 14, `Prec@${svg.fmt(report.k)}`, { anchor: "start", size: 10 }));
  parts.push(svg.rect(legendX + 80, plot.y0 + 4, 12, 12, METRIC_COLORS.mrr));
  parts.push(svg.label(legendX + 98, plot.y0 + 14, `MRR@${svg.fmt(report.k)}`, { anchor: "start", size: 10 }));
  parts.push(svg.closeSvg());
  return parts.join("");
}

export function renderFigure(kind: FigureKind, payload: unknown, heading?: string): string {
  switch (kind) {
    case "class-distribution-bar":
      return renderClassDistribution(payload, heading);
    case "per-slice-grouped-bar":
      return renderSliceMetrics(payload, heading);
    case "frequency-histogram":
      return renderFrequencyHistogram(payload, heading);
    case "proportion-bar":
      return renderProportions(payload, heading);
    default: {
      const never: never = kind;
      throw new Error(`unknown figure kind ${String(never)}`);
    }
  }
}
