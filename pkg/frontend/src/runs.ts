/**
 * Discover experiment run directories and their resolved configs.
 *
 * A run directory is any directory containing metrics.csv; the input root
 * may itself be a run directory or a directory of run directories.
 */

import { existsSync, readdirSync, readFileSync, statSync } from 'fs';
import { join, basename } from 'path';

export interface RunDir {
  name: string;
  path: string;
  config: Map<string, string>;
}

function readConfig(dir: string): Map<string, string> {
  const out = new Map<string, string>();
  const file = join(dir, 'config.resolved');
  if (!existsSync(file)) {
    return out;
  }
  for (const line of readFileSync(file, 'utf8').split('\n')) {
    const trimmed = line.trim();
    if (!trimmed || trimmed.startsWith('#')) {
      continue;
    }
    const eq = trimmed.indexOf('=');
    if (eq < 0) {
      continue;
    }
    out.set(trimmed.slice(0, eq).trim(), trimmed.slice(eq + 1).trim());
  }
  return out;
}

export function discoverRuns(root: string): RunDir[] {
  if (existsSync(join(root, 'metrics.csv'))) {
    return [{ name: basename(root), path: root, config: readConfig(root) }];
  }
  const runs: RunDir[] = [];
  for (const entry of readdirSync(root).sort()) {
    const path = join(root, entry);
    if (statSync(path).isDirectory() && existsSync(join(path, 'metrics.csv'))) {
      runs.push({ name: entry, path, config: readConfig(path) });
    }
  }
  if (runs.length === 0) {
    throw new Error(`${root}: no run directories (metrics.csv) found`);
  }
  return runs;
}

export function configNumber(run: RunDir, key: string): number | undefined {
  const raw = run.config.get(key);
  if (raw === undefined) {
    return undefined;
  }
  const value = Number(raw);
  return Number.isNaN(value) ? undefined : value;
}

/** Label for a run: its noise fraction when known, else the dir name. */
export function runLabel(run: RunDir): string {
  const eps = configNumber(run, 'noise_fraction');
  if (eps !== undefined) {
    return `${Math.round(eps * 100)}% noise`;
  }
  return run.name;
}
