import assert from 'node:assert/strict';
import * as fs from 'fs';
import * as path from 'path';
import { after, before, test } from 'node:test';
import * as tf from '@tensorflow/tfjs';

import { exportFeatures } from '../src/export';
import { readOfpf } from '../src/ofpf';
import { Fixture, makeFixture } from './helpers';

let fixture: Fixture;

before(async () => {
  await tf.setBackend('cpu');
  await tf.ready();
  fixture = await makeFixture();
});

after(() => {
  fs.rmSync(fixture.dir, { recursive: true, force: true });
});

function outPath(name: string): string {
  return path.join(fixture.dir, name);
}

test('emits one 4096-wide row per proposal, in order', async () => {
  const result = await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('a.ofpf'),
  });
  assert.equal(result.count, 5);
  assert.equal(result.dim, 4096);
  assert.equal(result.imageId, 'scene');
  const parsed = readOfpf(fs.readFileSync(outPath('a.ofpf')));
  assert.equal(parsed.dim, 4096);
  assert.equal(parsed.proposals.length, 5);
  // boxes preserved in proposal-file order
  assert.deepEqual(
    parsed.proposals.map((p) => [p.x, p.y, p.w, p.h]),
    [
      [0, 0, 48, 48],
      [4, 6, 20, 16],
      [4, 6, 20, 16],
      [30, 24, 12, 18],
      [10, 30, 24, 10],
    ],
  );
});

test('duplicated proposal boxes produce identical rows', async () => {
  const parsed = readOfpf(fs.readFileSync(outPath('a.ofpf')));
  assert.deepEqual([...parsed.rows[1]], [...parsed.rows[2]]);
});

test('rectified rows are non-negative; raw rows are not', async () => {
  const parsed = readOfpf(fs.readFileSync(outPath('a.ofpf')));
  for (const row of parsed.rows) {
    for (const v of row) assert.ok(v >= 0, `rectified value ${v} < 0`);
  }
  await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('raw.ofpf'),
    relu: false,
  });
  const raw = readOfpf(fs.readFileSync(outPath('raw.ofpf')));
  const hasNegative = raw.rows.some((row) => [...row].some((v) => v < 0));
  assert.ok(hasNegative, 'linear fc6 output of a random-weight net should go negative somewhere');
});

test('batch size does not move values beyond 1e-4', async () => {
  await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('b1.ofpf'),
    batchSize: 1,
  });
  await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('b3.ofpf'),
    batchSize: 3,
  });
  const one = readOfpf(fs.readFileSync(outPath('b1.ofpf')));
  const three = readOfpf(fs.readFileSync(outPath('b3.ofpf')));
  let worst = 0;
  for (let i = 0; i < one.rows.length; i++) {
    for (let j = 0; j < one.dim; j++) {
      worst = Math.max(worst, Math.abs(one.rows[i][j] - three.rows[i][j]));
    }
  }
  assert.ok(worst <= 1e-4, `batch size changed values by ${worst}`);
});

test('repeated export is byte-identical', async () => {
  await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('r1.ofpf'),
  });
  await exportFeatures({
    imagePath: fixture.imagePath,
    proposalsPath: fixture.proposalsPath,
    modelDir: fixture.modelDir,
    outPath: outPath('r2.ofpf'),
  });
  assert.deepEqual(fs.readFileSync(outPath('r1.ofpf')), fs.readFileSync(outPath('r2.ofpf')));
});

test('dim expectation guards the contract', async () => {
  await assert.rejects(
    exportFeatures({
      imagePath: fixture.imagePath,
      proposalsPath: fixture.proposalsPath,
      modelDir: fixture.modelDir,
      outPath: outPath('x.ofpf'),
      expectDim: 512,
    }),
    /emits 4096 values per region, expected 512/,
  );
});

test('out-of-bounds proposals are rejected', async () => {
  const badProposals = path.join(fixture.dir, 'bad.proposals.txt');
  fs.writeFileSync(badProposals, 'scene 40 40 20 20 0.5\n');
  await assert.rejects(
    exportFeatures({
      imagePath: fixture.imagePath,
      proposalsPath: badProposals,
      modelDir: fixture.modelDir,
      outPath: outPath('y.ofpf'),
    }),
    /exceeds image/,
  );
});

test('missing layer names the available layers', async () => {
  await assert.rejects(
    exportFeatures({
      imagePath: fixture.imagePath,
      proposalsPath: fixture.proposalsPath,
      modelDir: fixture.modelDir,
      outPath: outPath('z.ofpf'),
      layer: 'fc9',
    }),
    /no layer "fc9".*fc6/,
  );
});
