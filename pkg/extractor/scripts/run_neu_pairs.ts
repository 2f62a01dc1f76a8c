/** Run the five-pair steel-surface protocol over a class-per-directory tree.
 *
 * Expects six class directories of PGM images (convert BMPs first, e.g.
 * `mogrify -format pgm *.bmp` in each class directory). For each pair this
 * fine-tunes the classifier head (200 train / 100 test per class), exports
 * embeddings for train/test non-defect and the four held-out OOD classes,
 * and writes everything under --out/<nondefect>__<defect>/.
 *
 *   node dist/scripts/run_neu_pairs.js --data /path/to/NEU --out /tmp/neu-embeddings
 */
import { parseArgs } from "node:util";

import { exportEmbeddings } from "../src/export.js";
import { finetune } from "../src/model.js";
import { splitDataset } from "../src/pair.js";

const FIVE_PAIRS: Array<[string, string]> = [
  ["inclusion", "scratches"],
  ["patches", "crazing"],
  ["inclusion", "crazing"],
  ["inclusion", "patches"],
  ["rolled-in_scale", "crazing"],
];

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      data: { type: "string" },
      out: { type: "string" },
      pairs: { type: "string", multiple: true },
      "embed-dim": { type: "string", default: "1024" },
      "image-size": { type: "string", default: "64" },
      epochs: { type: "string", default: "12" },
      seed: { type: "string", default: "0" },
      format: { type: "string", default: "csv" },
    },
  });
  if (!values.data || !values.out) {
    console.error("usage: run_neu_pairs --data <dataset-dir> --out <output-dir> " +
      "[--pairs nondefect:defect ...] [--embed-dim N] [--image-size N] [--epochs N] [--seed N]");
    return 2;
  }
  const pairs = values.pairs?.length
    ? values.pairs.map((p) => {
        const [nd, df] = p.split(":");
        if (!nd || !df) throw new Error(`bad --pairs value ${p}, expected nondefect:defect`);
        return [nd, df] as [string, string];
      })
    : FIVE_PAIRS;

  for (const [nondefect, defect] of pairs) {
    const tag = `${nondefect}__${defect}`;
    console.log(`\n=== pair ${nondefect} : ${defect}`);
    const split = splitDataset(values.data, {
      nondefectClass: nondefect,
      defectClass: defect,
      trainFraction: 2 / 3, // 300 per class -> 200 train / 100 test
      maxTrain: 200,
      maxTest: 100,
      seed: Number(values.seed),
    });
    const trained = await finetune(split.trainNondefect, split.trainDefect, {
      embedDim: Number(values["embed-dim"]),
      imageSize: Number(values["image-size"]),
      epochs: Number(values.epochs),
      seed: Number(values.seed),
      verbose: true,
    });
    console.log(`train acc ${trained.trainAccuracy.toFixed(4)}, ` +
      `val acc ${trained.valAccuracy.toFixed(4)}`);
    const result = exportEmbeddings(trained, split, `${values.out}/${tag}`, {
      format: values.format === "bin" ? "bin" : "csv",
    });
    for (const [cls, share] of Object.entries(result.typeIiShare)) {
      console.log(`  ood ${cls}: ${(share * 100).toFixed(1)}% predicted non-defect`);
    }
    console.log(`  wrote ${Object.keys(result.files).length} files + manifest to ${values.out}/${tag}`);
    trained.model.dispose();
  }
  return 0;
}

main().then((code) => process.exit(code), (err) => {
  console.error(`error: ${err.message}`);
  process.exit(2);
});
