import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { saveModel } from '../src/model';
import { encodePpm, RasterImage } from '../src/ppm';

export const INPUT_SIZE = 16;

/** Tiny deterministic classifier exposing a 'fc6' dense layer.
 *  fc6 is linear so the exporter's --relu/--no-relu switch is observable. */
export function makeTinyModel(units = 4096, seed = 7): tf.LayersModel {
  const model = tf.sequential();
  model.add(tf.layers.flatten({ inputShape: [INPUT_SIZE, INPUT_SIZE, 3] }));
  model.add(
    tf.layers.dense({
      units,
      name: 'fc6',
      activation: 'linear',
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: 'zeros',
    }),
  );
  model.add(
    tf.layers.dense({
      units: 8,
      name: 'logits',
      activation: 'softmax',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
    }),
  );
  return model;
}

export function paintScene(size = 48): RasterImage {
  const pixels = new Uint8Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const o = (y * size + x) * 3;
      pixels[o] = 40 + ((x * 5) % 160);
      pixels[o + 1] = 60 + ((y * 3) % 120);
      pixels[o + 2] = (x + y) % 2 === 0 ? 200 : 30;
    }
  }
  return { width: size, height: size, pixels };
}

export interface Fixture {
  dir: string;
  imagePath: string;
  proposalsPath: string;
  modelDir: string;
}

export async function makeFixture(units = 4096, seed = 7): Promise<Fixture> {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'opr-export-'));
  const imagePath = path.join(dir, 'scene.ppm');
  fs.writeFileSync(imagePath, encodePpm(paintScene()));
  const proposalsPath = path.join(dir, 'scene.proposals.txt');
  fs.writeFileSync(
    proposalsPath,
    [
      'scene 0 0 48 48 0.9',
      'scene 4 6 20 16 0.7',
      'scene 4 6 20 16 0.5', // duplicate box, must yield an identical row
      'scene 30 24 12 18 0.3',
      'scene 10 30 24 10 0.1',
    ].join('\n') + '\n',
  );
  const modelDir = path.join(dir, 'model');
  await saveModel(makeTinyModel(units, seed), modelDir);
  return { dir, imagePath, proposalsPath, modelDir };
}
