/** Regenerates testdata/exported.ofpf from testdata/tiny.ppm and
 *  testdata/tiny.proposals.txt with the seeded tiny model, so the
 *  retrieval package can verify cross-component OFPF compatibility.
 *
 *  usage: node dist/tools/make_fixture.js [testdata_dir]
 */

import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { exportFeatures } from '../src/export';
import { saveModel } from '../src/model';
import { makeTinyModel } from '../test/helpers';

async function main(): Promise<void> {
  const dataDir = process.argv[2] ?? path.join(__dirname, '..', '..', 'testdata');
  await tf.setBackend('cpu');
  await tf.ready();
  const modelDir = fs.mkdtempSync(path.join(os.tmpdir(), 'opr-fixture-model-'));
  try {
    await saveModel(makeTinyModel(4096, 7), modelDir);
    const result = await exportFeatures({
      imagePath: path.join(dataDir, 'tiny.ppm'),
      proposalsPath: path.join(dataDir, 'tiny.proposals.txt'),
      modelDir,
      outPath: path.join(dataDir, 'exported.ofpf'),
    });
    process.stdout.write(`exported.ofpf: ${result.count} rows x ${result.dim}\n`);
  } finally {
    fs.rmSync(modelDir, { recursive: true, force: true });
  }
}

main().catch((err: Error) => {
  process.stderr.write(`error: ${err.message}\n`);
  process.exit(1);
});
