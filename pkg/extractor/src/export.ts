/** Turn a trained pair model plus a dataset split into embedding files.
 *
 * Output layout under outDir:
 *   train_nondefect.{csv|bin}   truth 0, pred = classifier prediction
 *   test_nondefect.{csv|bin}    truth 0, pred = classifier prediction
 *   ood_<class>.{csv|bin}       truth 2, pred = classifier prediction
 *   manifest.json               provenance for the whole export
 *
 * The pred column always carries the classifier's own output, so an OOD
 * file's share of pred=0 rows is the classifier's real type II behavior.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import {
  EmbeddingRecord,
  NONDEFECT,
  OOD_TRUTH,
  writeEmbeddingsBinary,
  writeEmbeddingsCsv,
} from "./dataio.js";
import { BACKBONE_ID, TrainedModel, extract } from "./model.js";
import { DatasetSplit } from "./pair.js";

export interface ExportOptions {
  format: "csv" | "bin";
}

export interface ExportResult {
  files: Record<string, string>;
  manifestPath: string;
  /** fraction of OOD records the classifier called non-defect, per class */
  typeIiShare: Record<string, number>;
}

function toRecords(
  trained: TrainedModel,
  paths: string[],
  truth: number,
  nextId: { value: number },
): EmbeddingRecord[] {
  const { embeddings, predictions } = extract(trained, paths);
  return embeddings.map((features, i) => ({
    id: nextId.value++,
    pred: predictions[i],
    truth,
    features,
  }));
}

export function exportEmbeddings(
  trained: TrainedModel,
  split: DatasetSplit,
  outDir: string,
  options: Partial<ExportOptions> = {},
): ExportResult {
  const fmt = options.format ?? "csv";
  mkdirSync(outDir, { recursive: true });
  const dim = trained.options.embedDim;
  const write = fmt === "bin" ? writeEmbeddingsBinary : writeEmbeddingsCsv;
  const nextId = { value: 0 };

  const files: Record<string, string> = {};
  const typeIiShare: Record<string, number> = {};
  const counts: Record<string, number> = {};

  const groups: Array<[string, string[], number]> = [
    ["train_nondefect", split.trainNondefect, NONDEFECT],
    ["test_nondefect", split.testNondefect, NONDEFECT],
  ];
  for (const [cls, paths] of split.ood) {
    groups.push([`ood_${cls}`, paths, OOD_TRUTH]);
  }

  for (const [name, paths, truth] of groups) {
    const records = toRecords(trained, paths, truth, nextId);
    const path = join(outDir, `${name}.${fmt}`);
    write(path, dim, records);
    files[name] = path;
    counts[name] = records.length;
    if (truth === OOD_TRUTH && records.length > 0) {
      const nd = records.filter((r) => r.pred === NONDEFECT).length;
      typeIiShare[name.replace(/^ood_/, "")] = nd / records.length;
    }
  }

  const manifest = {
    backbone: BACKBONE_ID,
    image_size: trained.options.imageSize,
    embed_dim: dim,
    seed: trained.options.seed,
    epochs: trained.options.epochs,
    batch_size: trained.options.batchSize,
    validation_split: trained.options.validationSplit,
    optimizer: "adam",
    learning_rate: trained.options.learningRate,
    train_accuracy: trained.trainAccuracy,
    val_accuracy: trained.valAccuracy,
    format: fmt,
    counts,
    type_ii_share: typeIiShare,
    note: "training is stochastic; identical seeds do not guarantee identical embeddings across library versions",
  };
  const manifestPath = join(outDir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return { files, manifestPath, typeIiShare };
}
