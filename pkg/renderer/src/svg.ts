/**
 * Minimal deterministic SVG assembly: fixed canvas, fixed fonts, no
 * timestamps or randomness, so identical inputs produce identical bytes.
 */

export const WIDTH = 720;
export const HEIGHT = 420;
export const MARGIN = { top: 54, right: 24, bottom: 72, left: 78 };

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmt(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return value.toFixed(2);
}

export function openSvg(): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n`
  );
}

export function closeSvg(): string {
  return "</svg>\n";
}

export function title(text: string): string {
  return `<text x="${WIDTH / 2}" y="28" text-anchor="middle" font-size="17" fill="#222222">${esc(text)}</text>\n`;
}

export function subtitle(text: string): string {
  return `<text x="${WIDTH / 2}" y="46" text-anchor="middle" font-size="11" fill="#666666">${esc(text)}</text>\n`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>\n`;
}

export function label(
  x: number,
  y: number,
  text: string,
  opts: { anchor?: string; size?: number; fill?: string; rotate?: number } = {},
): string {
  const anchor = opts.anchor ?? "middle";
  const size = opts.size ?? 11;
  const fill = opts.fill ?? "#333333";
  const transform = opts.rotate ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="${size}" ` +
    `fill="${fill}"${transform}>${esc(text)}</text>\n`
  );
}

export function line(x1: number, y1: number, x2: number, y2: number, stroke = "#999999"): string {
  return (
    `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
    `stroke="${stroke}" stroke-width="1"/>\n`
  );
}

export interface Tick {
  value: number;
  text: string;
}

/** Evenly spaced "nice" ticks from zero to a rounded-up maximum. */
export function linearTicks(maxValue: number, count = 5): Tick[] {
  if (maxValue <= 0) return [{ value: 0, text: "0" }, { value: 1, text: "1" }];
  const rawStep = maxValue / count;
  const magnitude = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const frac = rawStep / magnitude;
  const step = (frac <= 1 ? 1 : frac <= 2 ? 2 : frac <= 5 ? 5 : 10) * magnitude;
  const ticks: Tick[] = [];
  for (let v = 0; v <= maxValue + step * 0.999; v += step) {
    ticks.push({ value: v, text: fmt(Number(v.toPrecision(10))) });
  }
  return ticks;
}
