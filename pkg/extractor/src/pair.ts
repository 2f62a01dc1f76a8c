/** Class-pair protocol over a directory-per-class image tree.
 *
 * One class plays "non-defect", one plays "defect", and every remaining
 * class directory is out-of-distribution material the trained classifier
 * never sees. Images are assigned to exactly one split.
 */
import { readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { mulberry32, shuffle } from "./rng.js";

export interface PairProtocol {
  nondefectClass: string;
  defectClass: string;
  /** remaining class directories; discovered when omitted */
  oodClasses?: string[];
  /** fraction of each in-distribution class used for training */
  trainFraction: number;
  /** shuffle seed for the split assignment */
  seed: number;
  /** cap per class per split; NEU protocol uses 200 train / 100 test */
  maxTrain?: number;
  maxTest?: number;
}

export interface DatasetSplit {
  trainNondefect: string[];
  trainDefect: string[];
  testNondefect: string[];
  testDefect: string[];
  /** class name -> image paths, everything from the held-out classes */
  ood: Map<string, string[]>;
}

const IMAGE_EXT = /\.(pgm|pnm)$/i;

export function listClassDirs(datasetDir: string): string[] {
  return readdirSync(datasetDir)
    .filter((name) => statSync(join(datasetDir, name)).isDirectory())
    .sort();
}

export function listImages(classDir: string): string[] {
  return readdirSync(classDir)
    .filter((name) => IMAGE_EXT.test(name))
    .sort()
    .map((name) => join(classDir, name));
}

function splitClass(
  images: string[],
  pair: PairProtocol,
  which: string,
): { train: string[]; test: string[] } {
  if (images.length < 2) {
    throw new Error(`class ${which} needs at least 2 images, found ${images.length}`);
  }
  const shuffled = shuffle([...images], mulberry32(pair.seed));
  let nTrain = Math.round(shuffled.length * pair.trainFraction);
  nTrain = Math.min(Math.max(nTrain, 1), shuffled.length - 1); // both splits non-empty
  if (pair.maxTrain !== undefined) nTrain = Math.min(nTrain, pair.maxTrain);
  let test = shuffled.slice(nTrain);
  if (pair.maxTest !== undefined) test = test.slice(0, pair.maxTest);
  return { train: shuffled.slice(0, nTrain), test };
}

export function splitDataset(datasetDir: string, pair: PairProtocol): DatasetSplit {
  if (pair.nondefectClass === pair.defectClass) {
    throw new Error("non-defect and defect classes must differ");
  }
  if (!(pair.trainFraction > 0 && pair.trainFraction < 1)) {
    throw new Error(`trainFraction must lie in (0, 1), got ${pair.trainFraction}`);
  }
  const classes = listClassDirs(datasetDir);
  for (const cls of [pair.nondefectClass, pair.defectClass]) {
    if (!classes.includes(cls)) throw new Error(`missing class directory: ${cls}`);
  }
  const oodNames =
    pair.oodClasses ??
    classes.filter((c) => c !== pair.nondefectClass && c !== pair.defectClass);
  for (const cls of oodNames) {
    if (!classes.includes(cls)) throw new Error(`missing class directory: ${cls}`);
    if (cls === pair.nondefectClass || cls === pair.defectClass) {
      throw new Error(`class ${cls} cannot be both in-distribution and OOD`);
    }
  }

  const nd = splitClass(listImages(join(datasetDir, pair.nondefectClass)), pair, pair.nondefectClass);
  const df = splitClass(listImages(join(datasetDir, pair.defectClass)), pair, pair.defectClass);
  const ood = new Map<string, string[]>();
  for (const cls of oodNames) ood.set(cls, listImages(join(datasetDir, cls)));
  return {
    trainNondefect: nd.train,
    trainDefect: df.train,
    testNondefect: nd.test,
    testDefect: df.test,
    ood,
  };
}
