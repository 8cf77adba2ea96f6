/** Per-region activation export: crop, resize, mean-subtract, forward,
 *  and write rows aligned with proposal order as OFPF v1. */

import * as fs from 'fs';
import * as tf from '@tensorflow/tfjs';

import { activationModel, loadModel, modelInputSize } from './model';
import { writeOfpf } from './ofpf';
import { decodePpm, RasterImage } from './ppm';
import { parseProposals, Proposal } from './proposals';

export interface ExportJob {
  imagePath: string;
  proposalsPath: string;
  modelDir: string;
  outPath: string;
  /** layer whose output becomes the feature row; default fc6 */
  layer?: string;
  /** apply rectification to the tapped layer output; default true */
  relu?: boolean;
  /** per-channel values subtracted after scaling to 0..255 floats */
  mean?: [number, number, number];
  /** crops per forward pass; must not change values beyond 1e-4 */
  batchSize?: number;
  /** row width the output must have; null skips the check */
  expectDim?: number | null;
}

export interface ExportResult {
  imageId: string;
  count: number;
  dim: number;
}

function imageToTensor(image: RasterImage): tf.Tensor3D {
  return tf.tensor3d(Float32Array.from(image.pixels), [image.height, image.width, 3]);
}

function checkBounds(p: Proposal, image: RasterImage, index: number): void {
  if (p.x + p.w > image.width || p.y + p.h > image.height) {
    throw new Error(
      `proposal ${index} box (${p.x},${p.y},${p.w},${p.h}) exceeds image ` +
        `${image.width}x${image.height}`,
    );
  }
}

export async function exportFeatures(job: ExportJob): Promise<ExportResult> {
  const layerName = job.layer ?? 'fc6';
  const relu = job.relu ?? true;
  const mean = job.mean ?? [0, 0, 0];
  const batchSize = job.batchSize ?? 16;
  const expectDim = job.expectDim === undefined ? 4096 : job.expectDim;
  if (batchSize < 1) throw new Error(`batch size must be positive, got ${batchSize}`);

  const image = decodePpm(fs.readFileSync(job.imagePath));
  const { imageId, proposals } = parseProposals(fs.readFileSync(job.proposalsPath, 'utf8'));
  proposals.forEach((p, i) => checkBounds(p, image, i));

  const base = await loadModel(job.modelDir);
  const tap = activationModel(base, layerName);
  const [inputH, inputW] = modelInputSize(base);

  const source = imageToTensor(image);
  const meanTensor = tf.tensor1d(mean);
  const rows: Float32Array[] = [];
  try {
    for (let start = 0; start < proposals.length; start += batchSize) {
      const slice = proposals.slice(start, start + batchSize);
      const batchOut = tf.tidy(() => {
        const crops = slice.map((p) => {
          const crop = tf.slice(source, [p.y, p.x, 0], [p.h, p.w, 3]);
          return tf.image.resizeBilinear(crop as tf.Tensor3D, [inputH, inputW], false, true);
        });
        const batch = tf.sub(tf.stack(crops), meanTensor);
        const out = tap.predict(batch, { batchSize: slice.length }) as tf.Tensor;
        return relu ? tf.relu(out) : out;
      });
      const data = await batchOut.data();
      const dim = batchOut.shape[batchOut.shape.length - 1];
      for (let i = 0; i < slice.length; i++) {
        rows.push(Float32Array.from(data.subarray(i * dim, (i + 1) * dim)));
      }
      batchOut.dispose();
    }
  } finally {
    source.dispose();
    meanTensor.dispose();
  }

  const dim = rows.length > 0 ? rows[0].length : tapOutputDim(tap);
  if (expectDim !== null && dim !== expectDim) {
    throw new Error(
      `layer ${layerName} emits ${dim} values per region, expected ${expectDim} ` +
        `(pass --expect-dim to override)`,
    );
  }
  fs.writeFileSync(job.outPath, writeOfpf(proposals, rows, dim));
  return { imageId, count: rows.length, dim };
}

function tapOutputDim(tap: tf.LayersModel): number {
  const shape = tap.outputs[0].shape;
  const dim = shape[shape.length - 1];
  if (!dim) throw new Error('cannot infer feature dimension from the model');
  return dim;
}
