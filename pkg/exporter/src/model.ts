/** tfjs LayersModel file IO for Node without native bindings.
 *  A saved model is a directory holding model.json (topology + weights
 *  manifest) and one or more .bin weight shards. */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

function concatBuffers(buffers: Buffer[]): ArrayBuffer {
  const total = buffers.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const b of buffers) {
    out.set(new Uint8Array(b.buffer, b.byteOffset, b.byteLength), offset);
    offset += b.byteLength;
  }
  return out.buffer;
}

export function fileLoadHandler(dir: string): tf.io.IOHandler {
  return {
    load: async () => {
      const jsonPath = path.join(dir, 'model.json');
      const modelJson = JSON.parse(fs.readFileSync(jsonPath, 'utf8'));
      const manifest = modelJson.weightsManifest as Array<{
        paths: string[];
        weights: tf.io.WeightsManifestEntry[];
      }>;
      if (!manifest) throw new Error(`${jsonPath} has no weightsManifest`);
      const weightSpecs = manifest.flatMap((group) => group.weights);
      const shards = manifest
        .flatMap((group) => group.paths)
        .map((rel) => fs.readFileSync(path.join(dir, rel)));
      return {
        modelTopology: modelJson.modelTopology,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        convertedBy: modelJson.convertedBy,
        weightSpecs,
        weightData: concatBuffers(shards),
      };
    },
  };
}

function weightDataToBuffer(weightData: tf.io.ModelArtifacts['weightData']): Buffer {
  if (weightData instanceof ArrayBuffer) {
    return Buffer.from(weightData);
  }
  // tfjs >= 4.17 may hand back an array of ArrayBuffers
  const parts = (weightData as ArrayBuffer[]).map((part) => Buffer.from(part));
  return Buffer.concat(parts);
}

export function fileSaveHandler(dir: string): tf.io.IOHandler {
  return {
    save: async (artifacts: tf.io.ModelArtifacts) => {
      fs.mkdirSync(dir, { recursive: true });
      const weightsName = 'weights.bin';
      fs.writeFileSync(path.join(dir, weightsName), weightDataToBuffer(artifacts.weightData));
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format ?? 'layers-model',
        generatedBy: artifacts.generatedBy ?? 'opr-exporter',
        convertedBy: null,
        weightsManifest: [{ paths: [weightsName], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      };
    },
  };
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  return tf.loadLayersModel(fileLoadHandler(dir));
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  await model.save(fileSaveHandler(dir));
}

/** Sub-model emitting the named layer's output (the activation tap). */
export function activationModel(model: tf.LayersModel, layerName: string): tf.LayersModel {
  let layer: tf.layers.Layer;
  try {
    layer = model.getLayer(layerName);
  } catch {
    const names = model.layers.map((l) => l.name).join(', ');
    throw new Error(`model has no layer ${JSON.stringify(layerName)}; layers: ${names}`);
  }
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor });
}

/** [height, width] the model expects, from its input shape [null, h, w, 3]. */
export function modelInputSize(model: tf.LayersModel): [number, number] {
  const shape = model.inputs[0].shape;
  if (shape.length !== 4 || shape[3] !== 3) {
    throw new Error(`expected an RGB image input [batch, h, w, 3], got [${shape.join(', ')}]`);
  }
  const h = shape[1];
  const w = shape[2];
  if (!h || !w) throw new Error('model input height/width must be fixed');
  return [h, w];
}
