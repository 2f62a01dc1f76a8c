/** Frozen-backbone binary classifier with an embedding head.
 *
 * The convolutional backbone is seeded and never trained; only the replaced
 * head (a dense embedding layer feeding a 2-way softmax) learns the class
 * pair. The penultimate dense activations are the exported embeddings.
 */
import * as tf from "@tensorflow/tfjs";

import { GrayImage, readPgm, resize, toFloats } from "./pgm.js";
import { mulberry32, shuffle } from "./rng.js";

export const BACKBONE_ID = "seeded-conv3-frozen";

export interface FinetuneOptions {
  /** square input resolution images are resized to */
  imageSize: number;
  embedDim: number;
  epochs: number;
  batchSize: number;
  seed: number;
  validationSplit: number;
  /** adam step size; the frozen backbone leaves small-scale features, so
   *  the head wants a larger rate than adam's default */
  learningRate: number;
  verbose: boolean;
}

export const DEFAULT_OPTIONS: FinetuneOptions = {
  imageSize: 64,
  embedDim: 1024,
  epochs: 12,
  batchSize: 32,
  seed: 0,
  validationSplit: 0.2,
  learningRate: 0.01,
  verbose: false,
};

export interface TrainedModel {
  model: tf.LayersModel;
  /** same weights, output truncated at the embedding layer */
  embedder: tf.LayersModel;
  options: FinetuneOptions;
  trainAccuracy: number;
  valAccuracy: number;
}

export function buildModel(opts: FinetuneOptions): { model: tf.LayersModel; embedder: tf.LayersModel } {
  const init = (offset: number) => tf.initializers.glorotUniform({ seed: opts.seed + offset });
  const input = tf.input({ shape: [opts.imageSize, opts.imageSize, 1] });

  let x = tf.layers
    .conv2d({ filters: 8, kernelSize: 3, activation: "relu", padding: "same",
              kernelInitializer: init(1), trainable: false, name: "backbone_conv1" })
    .apply(input) as tf.SymbolicTensor;
  x = tf.layers.maxPooling2d({ poolSize: 2, name: "backbone_pool1" }).apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .conv2d({ filters: 16, kernelSize: 3, activation: "relu", padding: "same",
              kernelInitializer: init(2), trainable: false, name: "backbone_conv2" })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.maxPooling2d({ poolSize: 2, name: "backbone_pool2" }).apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .conv2d({ filters: 32, kernelSize: 3, activation: "relu", padding: "same",
              kernelInitializer: init(3), trainable: false, name: "backbone_conv3" })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.maxPooling2d({ poolSize: 2, name: "backbone_pool3" }).apply(x) as tf.SymbolicTensor;
  x = tf.layers.flatten({ name: "backbone_flatten" }).apply(x) as tf.SymbolicTensor;

  const embedding = tf.layers
    .dense({ units: opts.embedDim, activation: "relu",
             kernelInitializer: init(4), name: "embedding" })
    .apply(x) as tf.SymbolicTensor;
  const output = tf.layers
    .dense({ units: 2, activation: "softmax", kernelInitializer: init(5), name: "head" })
    .apply(embedding) as tf.SymbolicTensor;

  const model = tf.model({ inputs: input, outputs: output });
  const embedder = tf.model({ inputs: input, outputs: embedding });
  return { model, embedder };
}

export function loadImageTensorData(paths: string[], imageSize: number): Float32Array {
  const out = new Float32Array(paths.length * imageSize * imageSize);
  let offset = 0;
  for (const path of paths) {
    let img: GrayImage;
    try {
      img = readPgm(path);
    } catch (err) {
      // unreadable image: skip with a warning, keep the batch going
      console.warn(`skipping unreadable image ${path}: ${(err as Error).message}`);
      continue;
    }
    out.set(toFloats(resize(img, imageSize, imageSize)), offset);
    offset += imageSize * imageSize;
  }
  return out.subarray(0, offset) as Float32Array;
}

function stackImages(paths: string[], imageSize: number): tf.Tensor4D {
  const data = loadImageTensorData(paths, imageSize);
  const n = data.length / (imageSize * imageSize);
  return tf.tensor4d(data, [n, imageSize, imageSize, 1]);
}

export async function finetune(
  trainNondefect: string[],
  trainDefect: string[],
  options: Partial<FinetuneOptions> = {},
): Promise<TrainedModel> {
  const opts: FinetuneOptions = { ...DEFAULT_OPTIONS, ...options };
  if (trainNondefect.length < 2 || trainDefect.length < 2) {
    throw new Error("need at least 2 training images per class");
  }
  await tf.ready();

  // deterministic order, then a seeded shuffle so validationSplit
  // (which takes the tail) sees both classes
  const labeled: Array<{ path: string; label: number }> = [
    ...trainNondefect.map((path) => ({ path, label: 0 })),
    ...trainDefect.map((path) => ({ path, label: 1 })),
  ];
  shuffle(labeled, mulberry32(opts.seed ^ 0x5f3759df));

  const { model, embedder } = buildModel(opts);
  model.compile({
    optimizer: tf.train.adam(opts.learningRate),
    loss: "categoricalCrossentropy",
    metrics: ["accuracy"],
  });

  const xs = stackImages(labeled.map((l) => l.path), opts.imageSize);
  const ys = tf.oneHot(tf.tensor1d(labeled.map((l) => l.label), "int32"), 2);
  try {
    const history = await model.fit(xs, ys, {
      epochs: opts.epochs,
      batchSize: opts.batchSize,
      validationSplit: opts.validationSplit,
      shuffle: false,
      verbose: opts.verbose ? 1 : 0,
    });
    const accSeries = (history.history["acc"] ?? history.history["accuracy"]) as number[];
    const valSeries = (history.history["val_acc"] ?? history.history["val_accuracy"]) as number[];
    return {
      model,
      embedder,
      options: opts,
      trainAccuracy: accSeries[accSeries.length - 1],
      valAccuracy: valSeries ? valSeries[valSeries.length - 1] : NaN,
    };
  } finally {
    xs.dispose();
    ys.dispose();
  }
}

export interface Extraction {
  /** one Float32Array of length embedDim per image */
  embeddings: Float32Array[];
  /** classifier predictions: 0 non-defect, 1 defect */
  predictions: number[];
}

export function extract(trained: TrainedModel, paths: string[]): Extraction {
  if (paths.length === 0) return { embeddings: [], predictions: [] };
  const { imageSize, embedDim } = trained.options;
  const xs = stackImages(paths, imageSize);
  try {
    const emb = trained.embedder.predict(xs, { batchSize: 64 }) as tf.Tensor2D;
    const probs = trained.model.predict(xs, { batchSize: 64 }) as tf.Tensor2D;
    const flat = emb.dataSync() as Float32Array;
    const preds = probs.argMax(1).dataSync();
    emb.dispose();
    probs.dispose();
    const embeddings: Float32Array[] = [];
    const n = flat.length / embedDim;
    for (let i = 0; i < n; i++) {
      embeddings.push(flat.slice(i * embedDim, (i + 1) * embedDim));
    }
    return { embeddings, predictions: Array.from(preds) };
  } finally {
    xs.dispose();
  }
}
