/**
 * Readers for the training harness CSV logs.
 *
 * Values are kept both as raw strings (so --dump-points can echo inputs
 * exactly) and as parsed numbers for scaling. Unknown columns are ignored;
 * missing required columns are an error naming the file and column.
 */

import { readFileSync } from 'fs';

export class MissingColumnError extends Error {
  constructor(file: string, column: string) {
    super(`${file}: missing required column "${column}"`);
  }
}

export interface Table {
  header: string[];
  rows: string[][];
  file: string;
}

export function parseCsvText(text: string, file: string): Table {
  const lines = text.split('\n').filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${file}: empty CSV`);
  }
  const header = lines[0]!.split(',');
  const rows = lines.slice(1).map((line) => line.split(','));
  return { header, rows, file };
}

export function readCsv(file: string): Table {
  return parseCsvText(readFileSync(file, 'utf8'), file);
}

/** Column accessor that preserves the raw strings. */
export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(table.file, name);
  }
  return table.rows.map((row) => {
    const value = row[idx];
    if (value === undefined) {
      throw new Error(`${table.file}: short row (no "${name}")`);
    }
    return value;
  });
}

export interface SeriesPoint {
  x: number;
  y: number;
  rawX: string;
  rawY: string;
}

/** Pair two columns into plot points, dropping rows with nan values. */
export function seriesOf(table: Table, xName: string, yName: string): SeriesPoint[] {
  const xs = column(table, xName);
  const ys = column(table, yName);
  const points: SeriesPoint[] = [];
  for (let i = 0; i < xs.length; i++) {
    const rawX = xs[i]!;
    const rawY = ys[i]!;
    const x = Number(rawX);
    const y = Number(rawY);
    if (Number.isNaN(x) || Number.isNaN(y)) {
      continue; // undefined statistics are recorded as nan, never plotted
    }
    points.push({ x, y, rawX, rawY });
  }
  return points;
}

/** Rows of a coherence table restricted to one world. */
export function worldRows(table: Table, world: string): Table {
  const idx = table.header.indexOf('world');
  if (idx < 0) {
    throw new MissingColumnError(table.file, 'world');
  }
  return {
    header: table.header,
    rows: table.rows.filter((row) => row[idx] === world),
    file: table.file,
  };
}

export function worldNames(table: Table): string[] {
  const idx = table.header.indexOf('world');
  if (idx < 0) {
    throw new MissingColumnError(table.file, 'world');
  }
  const seen: string[] = [];
  for (const row of table.rows) {
    const w = row[idx]!;
    if (!seen.includes(w)) {
      seen.push(w);
    }
  }
  return seen;
}
