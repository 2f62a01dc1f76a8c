export {
  DEFECT,
  EmbeddingRecord,
  FORMAT_VERSION,
  HEADER_SIZE,
  MAGIC,
  NONDEFECT,
  OOD_TRUTH,
  UNKNOWN,
  csvHeader,
  decodeEmbeddingsBinary,
  encodeEmbeddingsBinary,
  formatEmbeddingsCsv,
  parseEmbeddingsCsv,
  readEmbeddingsBinary,
  readEmbeddingsCsv,
  recordSize,
  writeEmbeddingsBinary,
  writeEmbeddingsCsv,
} from "./dataio.js";
export { GrayImage, decodePgm, encodePgm, readPgm, resize, toFloats, writePgm } from "./pgm.js";
export { DatasetSplit, PairProtocol, listClassDirs, listImages, splitDataset } from "./pair.js";
export {
  BACKBONE_ID,
  DEFAULT_OPTIONS,
  Extraction,
  FinetuneOptions,
  TrainedModel,
  buildModel,
  extract,
  finetune,
} from "./model.js";
export { ExportOptions, ExportResult, exportEmbeddings } from "./export.js";
export { SyntheticSpec, generateDataset, textureImage } from "./synthetic.js";
export { mulberry32 } from "./rng.js";
