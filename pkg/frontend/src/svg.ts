/**
 * Minimal SVG chart rendering: panels in a grid, each with axes, polyline
 * series, and a small legend. No dependencies; output is a static image.
 */

export interface Series {
  label: string;
  points: Array<{ x: number; y: number }>;
  color: string;
  dashed?: boolean;
}

export interface Panel {
  title: string;
  series: Series[];
  xLabel?: string;
  yLabel?: string;
  yDomain?: [number, number];
}

export const PALETTE = [
  '#1f77b4',
  '#d62728',
  '#2ca02c',
  '#9467bd',
  '#ff7f0e',
  '#8c564b',
  '#17becf',
];

const PANEL_W = 320;
const PANEL_H = 240;
const MARGIN = { top: 28, right: 12, bottom: 34, left: 48 };

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function extent(values: number[], fallback: [number, number]): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v));
  if (finite.length === 0) {
    return fallback;
  }
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    out.push(Number(v.toPrecision(10)));
  }
  return out;
}

function fmt(v: number): string {
  if (Math.abs(v) >= 10000 || (v !== 0 && Math.abs(v) < 0.001)) {
    return v.toExponential(0);
  }
  return String(Number(v.toPrecision(6)));
}

function renderPanel(panel: Panel, px: number, py: number): string {
  const innerW = PANEL_W - MARGIN.left - MARGIN.right;
  const innerH = PANEL_H - MARGIN.top - MARGIN.bottom;
  const allX = panel.series.flatMap((s) => s.points.map((p) => p.x));
  const allY = panel.series.flatMap((s) => s.points.map((p) => p.y));
  const [x0, x1] = extent(allX, [0, 1]);
  const [y0, y1] = panel.yDomain ?? extent(allY, [0, 1]);
  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * innerW;
  const sy = (y: number) => MARGIN.top + innerH - ((y - y0) / (y1 - y0)) * innerH;

  const parts: string[] = [];
  parts.push(`<g class="panel" transform="translate(${px},${py})">`);
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="white" stroke="#999"/>`
  );
  parts.push(
    `<text x="${PANEL_W / 2}" y="16" text-anchor="middle" font-size="12" font-weight="bold">${esc(panel.title)}</text>`
  );
  for (const t of ticks(x0, x1)) {
    const x = sx(t);
    parts.push(`<line x1="${x}" y1="${MARGIN.top + innerH}" x2="${x}" y2="${MARGIN.top + innerH + 4}" stroke="#333"/>`);
    parts.push(
      `<text x="${x}" y="${MARGIN.top + innerH + 15}" text-anchor="middle" font-size="9">${fmt(t)}</text>`
    );
  }
  for (const t of ticks(y0, y1)) {
    const y = sy(t);
    parts.push(`<line x1="${MARGIN.left - 4}" y1="${y}" x2="${MARGIN.left}" y2="${y}" stroke="#333"/>`);
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y + 3}" text-anchor="end" font-size="9">${fmt(t)}</text>`
    );
  }
  if (panel.xLabel) {
    parts.push(
      `<text x="${MARGIN.left + innerW / 2}" y="${PANEL_H - 6}" text-anchor="middle" font-size="10">${esc(panel.xLabel)}</text>`
    );
  }
  if (panel.yLabel) {
    parts.push(
      `<text x="10" y="${MARGIN.top + innerH / 2}" text-anchor="middle" font-size="10" transform="rotate(-90 10 ${MARGIN.top + innerH / 2})">${esc(panel.yLabel)}</text>`
    );
  }
  panel.series.forEach((s, i) => {
    if (s.points.length === 0) {
      return;
    }
    const path = s.points.map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`).join(' ');
    const dash = s.dashed ? ' stroke-dasharray="5,3"' : '';
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${s.color}" stroke-width="1.5"${dash}/>`
    );
    const ly = MARGIN.top + 10 + i * 11;
    parts.push(
      `<line x1="${MARGIN.left + innerW - 58}" y1="${ly}" x2="${MARGIN.left + innerW - 44}" y2="${ly}" stroke="${s.color}" stroke-width="2"${dash}/>`
    );
    parts.push(
      `<text x="${MARGIN.left + innerW - 40}" y="${ly + 3}" font-size="8">${esc(s.label)}</text>`
    );
  });
  parts.push('</g>');
  return parts.join('\n');
}

/** Lay panels out in a grid and return a complete SVG document. */
export function renderGrid(panels: Panel[], columns: number, title = ''): string {
  const cols = Math.max(1, columns);
  const rows = Math.ceil(panels.length / cols);
  const width = cols * PANEL_W;
  const titlePad = title ? 24 : 0;
  const height = rows * PANEL_H + titlePad;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (title) {
    parts.push(
      `<text x="${width / 2}" y="16" text-anchor="middle" font-size="14" font-weight="bold">${esc(title)}</text>`
    );
  }
  panels.forEach((panel, i) => {
    const px = (i % cols) * PANEL_W;
    const py = Math.floor(i / cols) * PANEL_H + titlePad;
    parts.push(renderPanel(panel, px, py));
  });
  parts.push('</svg>');
  return parts.join('\n');
}
