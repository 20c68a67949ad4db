/**
 * The four figure kinds built from harness CSV logs.
 *
 * Every plotted point is recorded with its raw CSV strings so that
 * --dump-points output can be compared to the input logs exactly. The only
 * computation beyond selecting columns is the overfit formula recheck in
 * the winsorization grid.
 */

import { join } from 'path';

import { Table, readCsv, seriesOf, worldNames, worldRows, SeriesPoint } from './csv';
import { RunDir, configNumber, runLabel } from './runs';
import { Panel, PALETTE, renderGrid } from './svg';

export interface DumpPoint {
  panel: string;
  series: string;
  x: string;
  y: string;
}

export interface Figure {
  svg: string;
  points: DumpPoint[];
}

function color(i: number): string {
  return PALETTE[i % PALETTE.length]!;
}

function toPanelSeries(points: SeriesPoint[]): Array<{ x: number; y: number }> {
  return points.map((p) => ({ x: p.x, y: p.y }));
}

function record(
  sink: DumpPoint[],
  panel: string,
  series: string,
  points: SeriesPoint[]
): void {
  for (const p of points) {
    sink.push({ panel, series, x: p.rawX, y: p.rawY });
  }
}

function metricsTable(run: RunDir): Table {
  return readCsv(join(run.path, 'metrics.csv'));
}

function coherenceTable(run: RunDir): Table {
  return readCsv(join(run.path, 'coherence.csv'));
}

/** Training/validation accuracy, loss, learned fractions; one curve per run. */
export function buildCurves(runs: RunDir[], logLoss = false): Figure {
  const dump: DumpPoint[] = [];
  const specs: Array<{ title: string; column: string; yDomain?: [number, number] }> = [
    { title: 'Training accuracy', column: 'ta', yDomain: [0, 1] },
    { title: 'Validation accuracy', column: 'va', yDomain: [0, 1] },
    { title: 'Training loss', column: 'train_loss' },
  ];
  const panels: Panel[] = specs.map((spec) => ({
    title: spec.title,
    xLabel: 'step',
    yLabel: spec.column,
    yDomain: spec.yDomain,
    series: runs.map((run, i) => {
      const pts = seriesOf(metricsTable(run), 'step', spec.column);
      record(dump, spec.title, runLabel(run), pts);
      const ys = pts.map((p) => ({
        x: p.x,
        y: logLoss && spec.column === 'train_loss' ? Math.log10(Math.max(p.y, 1e-12)) : p.y,
      }));
      return { label: runLabel(run), points: ys, color: color(i) };
    }),
  }));

  const learnedPanel: Panel = {
    title: 'Fraction learned (pristine solid; corrupt dashed)',
    xLabel: 'step',
    yLabel: 'fraction',
    yDomain: [0, 1],
    series: [],
  };
  runs.forEach((run, i) => {
    const table = metricsTable(run);
    const pristine = seriesOf(table, 'step', 'pristine_frac');
    record(dump, learnedPanel.title, `${runLabel(run)} pristine`, pristine);
    learnedPanel.series.push({
      label: `${runLabel(run)} p`,
      points: toPanelSeries(pristine),
      color: color(i),
    });
    const corrupt = seriesOf(table, 'step', 'corrupt_frac');
    if (corrupt.length > 0) {
      record(dump, learnedPanel.title, `${runLabel(run)} corrupt`, corrupt);
      learnedPanel.series.push({
        label: `${runLabel(run)} c`,
        points: toPanelSeries(corrupt),
        color: color(i),
        dashed: true,
      });
    }
  });
  panels.push(learnedPanel);

  return { svg: renderGrid(panels, 2, 'Label-noise training curves'), points: dump };
}

function coherenceGrid(
  runs: RunDir[],
  xName: string,
  pName: string,
  cName: string,
  title: string,
  maxStep?: number
): Figure {
  const dump: DumpPoint[] = [];
  const tables = runs.map((run) => coherenceTable(run));
  const worlds = worldNames(tables[0]!);
  const panels: Panel[] = [];
  for (const world of worlds) {
    for (let i = 0; i < runs.length; i++) {
      const run = runs[i]!;
      const table = worldRows(tables[i]!, world);
      const panelName = `${runLabel(run)} / ${world}`;
      let p = seriesOf(table, xName, pName);
      let c = seriesOf(table, xName, cName);
      if (maxStep !== undefined) {
        p = p.filter((pt) => pt.x < maxStep);
        c = c.filter((pt) => pt.x < maxStep);
      }
      record(dump, panelName, pName, p);
      record(dump, panelName, cName, c);
      panels.push({
        title: panelName,
        xLabel: 'step',
        series: [
          { label: pName, points: toPanelSeries(p), color: PALETTE[0]! },
          { label: cName, points: toPanelSeries(c), color: PALETTE[1]! },
        ],
      });
    }
  }
  return { svg: renderGrid(panels, Math.max(runs.length, 1), title), points: dump };
}

/** Pristine/corrupt loss-reduction fractions; rows = worlds, columns = runs. */
export function buildCoherencePanels(runs: RunDir[]): Figure {
  return coherenceGrid(runs, 'step', 'f_p', 'f_c', 'Loss-reduction fractions by world');
}

/** Cumulative per-example contributions over the first steps of training. */
export function buildCumulativePanels(runs: RunDir[], maxStep = 10): Figure {
  return coherenceGrid(
    runs,
    'step',
    'i_p',
    'i_c',
    `Cumulative per-example contributions (steps < ${maxStep})`,
    maxStep
  );
}

const OVERFIT_RECHECK_TOLERANCE = 1e-8;

/** Accuracy and overfit curves on a noise-level x winsorization grid. */
export function buildWinsorGrid(runs: RunDir[]): Figure {
  const dump: DumpPoint[] = [];
  const epsilons = [...new Set(runs.map((r) => configNumber(r, 'noise_fraction') ?? 0))].sort(
    (a, b) => a - b
  );
  const cs = [...new Set(runs.map((r) => configNumber(r, 'winsor_c') ?? 0))].sort(
    (a, b) => a - b
  );
  const panels: Panel[] = [];
  for (const c of cs) {
    for (const eps of epsilons) {
      const run = runs.find(
        (r) =>
          (configNumber(r, 'noise_fraction') ?? 0) === eps &&
          (configNumber(r, 'winsor_c') ?? 0) === c
      );
      const title = `${Math.round(eps * 100)}% noise, c=${c}`;
      if (!run) {
        panels.push({ title: `${title} (missing)`, series: [] });
        continue;
      }
      const table = metricsTable(run);
      const ta = seriesOf(table, 'step', 'ta');
      const va = seriesOf(table, 'step', 'va');
      const overfit = seriesOf(table, 'step', 'overfit');
      recheckOverfit(table, eps, run.name);
      record(dump, title, 'ta', ta);
      record(dump, title, 'va', va);
      record(dump, title, 'overfit', overfit);
      panels.push({
        title,
        xLabel: 'step',
        yDomain: [-0.1, 1],
        series: [
          { label: 'ta', points: toPanelSeries(ta), color: PALETTE[0]! },
          { label: 'va', points: toPanelSeries(va), color: PALETTE[2]! },
          { label: 'overfit', points: toPanelSeries(overfit), color: PALETTE[1]! },
        ],
      });
    }
  }
  return {
    svg: renderGrid(panels, Math.max(epsilons.length, 1), 'Winsorized-SGD grid'),
    points: dump,
  };
}

/** The logged overfit column must equal ta - [eps/10 + (1-eps)*va]. */
export function recheckOverfit(table: Table, eps: number, name: string): void {
  const ta = seriesOf(table, 'step', 'ta');
  const va = seriesOf(table, 'step', 'va');
  const overfit = seriesOf(table, 'step', 'overfit');
  for (let i = 0; i < overfit.length; i++) {
    const expected = ta[i]!.y - (eps / 10 + (1 - eps) * va[i]!.y);
    if (Math.abs(expected - overfit[i]!.y) > OVERFIT_RECHECK_TOLERANCE) {
      throw new Error(
        `${name}: overfit column mismatch at step ${overfit[i]!.rawX}: ` +
          `logged ${overfit[i]!.rawY}, recomputed ${expected}`
      );
    }
  }
}

export function dumpPointsText(points: DumpPoint[]): string {
  const lines = ['panel,series,x,y'];
  for (const p of points) {
    lines.push(`${p.panel},${p.series},${p.x},${p.y}`);
  }
  return lines.join('\n') + '\n';
}
