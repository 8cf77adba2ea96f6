import assert from 'node:assert/strict';
import { execFileSync, spawnSync } from 'node:child_process';
import * as fs from 'fs';
import * as path from 'path';
import { after, before, test } from 'node:test';
import * as tf from '@tensorflow/tfjs';

import { readOfpf } from '../src/ofpf';
import { Fixture, makeFixture } from './helpers';

const CLI = path.join(__dirname, '..', 'src', 'cli.js');

let fixture: Fixture;

before(async () => {
  await tf.setBackend('cpu');
  await tf.ready();
  fixture = await makeFixture();
});

after(() => {
  fs.rmSync(fixture.dir, { recursive: true, force: true });
});

test('export subprocess writes a parseable OFPF', () => {
  const out = path.join(fixture.dir, 'cli.ofpf');
  const stdout = execFileSync(
    process.execPath,
    [
      CLI,
      '--image', fixture.imagePath,
      '--proposals', fixture.proposalsPath,
      '--model', fixture.modelDir,
      '--out', out,
      '--layer', 'fc6',
      '--relu',
      '--batch', '4',
    ],
    { encoding: 'utf8' },
  );
  assert.match(stdout, /wrote .*5 rows x 4096 \(scene\)/);
  const parsed = readOfpf(fs.readFileSync(out));
  assert.equal(parsed.proposals.length, 5);
});

test('unknown flag fails with a single-line error', () => {
  const result = spawnSync(process.execPath, [CLI, '--bogus'], { encoding: 'utf8' });
  assert.equal(result.status, 1);
  assert.match(result.stderr, /^error: unknown flag --bogus\n$/);
});

test('missing required flag is reported', () => {
  const result = spawnSync(process.execPath, [CLI, '--image', 'x.ppm'], { encoding: 'utf8' });
  assert.equal(result.status, 1);
  assert.match(result.stderr, /--proposals is required/);
});

test('help exits zero', () => {
  const result = spawnSync(process.execPath, [CLI, '--help'], { encoding: 'utf8' });
  assert.equal(result.status, 0);
  assert.match(result.stdout, /usage: opr-export/);
});
