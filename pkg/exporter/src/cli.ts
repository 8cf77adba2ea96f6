#!/usr/bin/env node
/** opr-export: compute per-proposal CNN activations and write OFPF v1.
 *
 *  opr-export --image a.ppm --proposals a.proposals.txt \
 *             --model model_dir --out a.features.ofpf \
 *             [--layer fc6] [--relu | --no-relu] [--mean R,G,B] \
 *             [--batch 16] [--expect-dim 4096 | --expect-dim any] \
 *             [--backend cpu]
 */

import { exportFeatures, ExportJob } from './export';

interface CliOptions extends ExportJob {
  backend: string;
}

function usageError(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.exit(1);
}

export function parseArgs(argv: string[]): CliOptions {
  const opts: Partial<CliOptions> = {
    layer: 'fc6',
    relu: true,
    mean: [0, 0, 0],
    batchSize: 16,
    expectDim: 4096,
    backend: 'cpu',
  };
  const takeValue = (flag: string, i: number): string => {
    if (i + 1 >= argv.length) usageError(`${flag} needs a value`);
    return argv[i + 1];
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case '--image':
        opts.imagePath = takeValue(flag, i++);
        break;
      case '--proposals':
        opts.proposalsPath = takeValue(flag, i++);
        break;
      case '--model':
        opts.modelDir = takeValue(flag, i++);
        break;
      case '--out':
        opts.outPath = takeValue(flag, i++);
        break;
      case '--layer':
        opts.layer = takeValue(flag, i++);
        break;
      case '--relu':
        opts.relu = true;
        break;
      case '--no-relu':
        opts.relu = false;
        break;
      case '--mean': {
        const parts = takeValue(flag, i++).split(',').map(Number);
        if (parts.length !== 3 || parts.some((v) => !Number.isFinite(v))) {
          usageError('--mean expects R,G,B');
        }
        opts.mean = parts as [number, number, number];
        break;
      }
      case '--batch': {
        const value = Number(takeValue(flag, i++));
        if (!Number.isInteger(value) || value < 1) usageError('--batch expects a positive integer');
        opts.batchSize = value;
        break;
      }
      case '--expect-dim': {
        const raw = takeValue(flag, i++);
        if (raw === 'any') {
          opts.expectDim = null;
        } else {
          const value = Number(raw);
          if (!Number.isInteger(value) || value < 1) usageError('--expect-dim expects an integer or any');
          opts.expectDim = value;
        }
        break;
      }
      case '--backend':
        opts.backend = takeValue(flag, i++);
        break;
      case '--help':
      case '-h':
        process.stdout.write(
          'usage: opr-export --image PPM --proposals TXT --model DIR --out OFPF\n' +
            '            [--layer fc6] [--relu|--no-relu] [--mean R,G,B]\n' +
            '            [--batch 16] [--expect-dim 4096|any] [--backend cpu]\n',
        );
        process.exit(0);
        break;
      default:
        usageError(`unknown flag ${flag}`);
    }
  }
  for (const required of ['imagePath', 'proposalsPath', 'modelDir', 'outPath'] as const) {
    if (!opts[required]) {
      const flag = { imagePath: '--image', proposalsPath: '--proposals', modelDir: '--model', outPath: '--out' }[required];
      usageError(`${flag} is required`);
    }
  }
  if (opts.backend !== 'cpu') usageError(`unsupported backend ${opts.backend}; this build is cpu-only`);
  return opts as CliOptions;
}

async function main(): Promise<void> {
  const opts = parseArgs(process.argv.slice(2));
  const tf = await import('@tensorflow/tfjs');
  await tf.setBackend(opts.backend);
  await tf.ready();
  const result = await exportFeatures(opts);
  process.stdout.write(`wrote ${opts.outPath}: ${result.count} rows x ${result.dim} (${result.imageId})\n`);
}

if (require.main === module) {
  main().catch((err: Error) => {
    process.stderr.write(`error: ${err.message}\n`);
    process.exit(1);
  });
}
