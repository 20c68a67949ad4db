/** Build tiny synthetic run directories shaped like harness output. */

import { mkdirSync, mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';

export function tempRoot(): string {
  return mkdtempSync(join(tmpdir(), 'gradplot-'));
}

export interface RunSpec {
  name: string;
  eps: number;
  winsorC?: number;
  metricsRows?: string[];
  worlds?: string[];
}

export function writeRun(root: string, spec: RunSpec): string {
  const dir = join(root, spec.name);
  mkdirSync(dir, { recursive: true });
  const eps = spec.eps;
  const rows =
    spec.metricsRows ??
    [0, 100, 200].map((step, i) => {
      const ta = 0.1 + 0.3 * i;
      const va = 0.1 + 0.25 * i;
      const overfit = ta - (eps / 10 + (1 - eps) * va);
      const corrupt = eps === 0 ? 'nan' : String(0.05 * i);
      return `${step},${(2.3 - i * 0.5).toFixed(9)},${ta},${va},${0.1 + 0.3 * i},${corrupt},${overfit}`;
    });
  writeFileSync(
    join(dir, 'metrics.csv'),
    'step,train_loss,ta,va,pristine_frac,corrupt_frac,overfit\n' + rows.join('\n') + '\n'
  );
  const worlds = spec.worlds ?? ['real', 'null_0', 'null_1', 'null_2'];
  const coherence = ['step,world,f_p,f_c,i_p,i_c'];
  for (const step of [0, 1, 2, 12]) {
    for (const world of worlds) {
      const fp = world === 'real' ? 0.9 - step * 0.02 : 0.75;
      const fc = 1 - fp;
      coherence.push(`${step},${world},${fp},${fc},${0.1 * (step + 1)},${0.05 * (step + 1)}`);
    }
  }
  writeFileSync(join(dir, 'coherence.csv'), coherence.join('\n') + '\n');
  const learned = ['example,first_learned_step,pristine'];
  for (let i = 0; i < 6; i++) {
    learned.push(`${i},${i % 2 === 0 ? i * 10 : -1},${i % 2}`);
  }
  writeFileSync(join(dir, 'learned.csv'), learned.join('\n') + '\n');
  const config = [
    `noise_fraction = ${eps}`,
    `winsor_c = ${spec.winsorC ?? 0.0}`,
    'seed = 0',
  ];
  writeFileSync(join(dir, 'config.resolved'), config.join('\n') + '\n');
  return dir;
}
