#!/usr/bin/env node
/**
 * Render harness CSV logs as SVG figures.
 *
 * Usage: gradplot <kind> --in <dir> --out <file.svg> [--dump-points] [--max-step N]
 * Kinds: curves | coherence_panels | cumulative_panels | winsor_grid
 * (a leading "plot" token is accepted and ignored)
 */

import { writeFileSync } from 'fs';

import { Figure, buildCoherencePanels, buildCumulativePanels, buildCurves, buildWinsorGrid, dumpPointsText } from './figures';
import { discoverRuns } from './runs';

export const KINDS = ['curves', 'coherence_panels', 'cumulative_panels', 'winsor_grid'] as const;
export type Kind = (typeof KINDS)[number];

export interface Options {
  kind: Kind;
  inDir: string;
  outFile: string;
  dumpPoints: boolean;
  maxStep: number;
  logLoss: boolean;
}

export function parseArgs(argv: string[]): Options {
  const args = [...argv];
  if (args[0] === 'plot') {
    args.shift();
  }
  const kind = args.shift();
  if (!kind || !(KINDS as readonly string[]).includes(kind)) {
    throw new Error(`usage: gradplot <${KINDS.join('|')}> --in <dir> --out <file> [--dump-points]`);
  }
  const options: Options = {
    kind: kind as Kind,
    inDir: '',
    outFile: '',
    dumpPoints: false,
    maxStep: 10,
    logLoss: false,
  };
  while (args.length > 0) {
    const flag = args.shift()!;
    switch (flag) {
      case '--in':
        options.inDir = args.shift() ?? '';
        break;
      case '--out':
        options.outFile = args.shift() ?? '';
        break;
      case '--dump-points':
        options.dumpPoints = true;
        break;
      case '--max-step':
        options.maxStep = Number(args.shift() ?? '10');
        break;
      case '--log-loss':
        options.logLoss = true;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!options.inDir || !options.outFile) {
    throw new Error('--in and --out are required');
  }
  return options;
}

export function buildFigure(options: Options): Figure {
  const runs = discoverRuns(options.inDir);
  switch (options.kind) {
    case 'curves':
      return buildCurves(runs, options.logLoss);
    case 'coherence_panels':
      return buildCoherencePanels(runs);
    case 'cumulative_panels':
      return buildCumulativePanels(runs, options.maxStep);
    case 'winsor_grid':
      return buildWinsorGrid(runs);
  }
}

export function main(argv: string[]): number {
  let options: Options;
  try {
    options = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const figure = buildFigure(options);
    writeFileSync(options.outFile, figure.svg);
    if (options.dumpPoints) {
      process.stdout.write(dumpPointsText(figure.points));
    }
    console.error(`wrote ${options.outFile}`);
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
