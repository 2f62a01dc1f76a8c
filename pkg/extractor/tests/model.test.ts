import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { buildModel, extract, finetune, DEFAULT_OPTIONS, TrainedModel } from "../src/model.js";
import { splitDataset, DatasetSplit } from "../src/pair.js";
import { generateDataset } from "../src/synthetic.js";

let root: string;
let split: DatasetSplit;
let trained: TrainedModel;

// one small training run shared by the assertions below
beforeAll(async () => {
  root = mkdtempSync(join(tmpdir(), "model-"));
  generateDataset(root, {
    classes: ["plain", "streaked", "spotted"],
    imagesPerClass: 40,
    size: 24,
    seed: 7,
    noise: 12,
  });
  split = splitDataset(root, {
    nondefectClass: "plain",
    defectClass: "streaked",
    trainFraction: 0.75,
    seed: 7,
  });
  trained = await finetune(split.trainNondefect, split.trainDefect, {
    imageSize: 24,
    embedDim: 16,
    epochs: 10,
    batchSize: 16,
    seed: 7,
  });
}, 120_000);

afterAll(() => {
  trained?.model.dispose();
  rmSync(root, { recursive: true, force: true });
});

describe("buildModel", () => {
  it("keeps the backbone frozen and the head trainable", () => {
    const { model } = buildModel({ ...DEFAULT_OPTIONS, imageSize: 24, embedDim: 16 });
    const trainable = model.trainableWeights.map((w) => w.name.split("/")[0]);
    expect(new Set(trainable)).toEqual(new Set(["embedding", "head"]));
    const convLayers = model.layers.filter((l) => l.name.startsWith("backbone_conv"));
    expect(convLayers.length).toBe(3);
    for (const layer of convLayers) expect(layer.trainable).toBe(false);
    model.dispose();
  });

  it("emits embeddings of the configured width", () => {
    const { embedder } = buildModel({ ...DEFAULT_OPTIONS, imageSize: 24, embedDim: 33 });
    expect(embedder.outputs[0].shape).toEqual([null, 33]);
    embedder.dispose();
  });
});

describe("finetune", () => {
  it("separates the pair on held-out images", () => {
    expect(trained.trainAccuracy).toBeGreaterThan(0.9);
    const nd = extract(trained, split.testNondefect);
    const df = extract(trained, split.testDefect);
    const ndAccuracy = nd.predictions.filter((p) => p === 0).length / nd.predictions.length;
    const dfAccuracy = df.predictions.filter((p) => p === 1).length / df.predictions.length;
    expect(ndAccuracy).toBeGreaterThan(0.8);
    expect(dfAccuracy).toBeGreaterThan(0.8);
  });

  it("reports a validation accuracy", () => {
    expect(Number.isFinite(trained.valAccuracy)).toBe(true);
    expect(trained.valAccuracy).toBeGreaterThan(0.5);
  });

  it("rejects undersized classes", async () => {
    await expect(finetune(split.trainNondefect.slice(0, 1), split.trainDefect)).rejects.toThrow(
      /at least 2/,
    );
  });
});

describe("extract", () => {
  it("returns one embedding per image with finite values", () => {
    const { embeddings, predictions } = extract(trained, split.testNondefect.slice(0, 5));
    expect(embeddings.length).toBe(5);
    expect(predictions.length).toBe(5);
    for (const emb of embeddings) {
      expect(emb.length).toBe(16);
      expect([...emb].every(Number.isFinite)).toBe(true);
    }
    for (const p of predictions) expect([0, 1]).toContain(p);
  });

  it("handles the empty list", () => {
    expect(extract(trained, [])).toEqual({ embeddings: [], predictions: [] });
  });
});
