/** Embedding record serialization shared with the supervision toolkit.
 *
 * Two interchangeable layouts:
 *   CSV    header `id,pred,truth,f0,...,f{dim-1}`, one record per row
 *   binary magic "DFE1", u16 version=1, u32 dim, u64 count, then per record
 *          u64 id, u8 pred, u8 truth, dim little-endian f32 values
 *
 * Feature values are float32. CSV cells are written as the shortest decimal
 * that re-parses to the same float32, so csv -> bin -> csv is lossless.
 */
import { readFileSync, writeFileSync } from "node:fs";

export const NONDEFECT = 0;
export const DEFECT = 1;
export const OOD_TRUTH = 2;
export const UNKNOWN = 255;

export const MAGIC = "DFE1";
export const FORMAT_VERSION = 1;
export const HEADER_SIZE = 4 + 2 + 4 + 8;

export interface EmbeddingRecord {
  id: number;
  pred: number;
  truth: number;
  features: Float32Array;
}

function checkRecord(rec: EmbeddingRecord, dim: number): void {
  if (!Number.isSafeInteger(rec.id) || rec.id < 0) throw new Error(`bad record id ${rec.id}`);
  for (const [name, v] of [["pred", rec.pred], ["truth", rec.truth]] as const) {
    if (!Number.isInteger(v) || v < 0 || v > 255) throw new Error(`record ${rec.id}: bad ${name} ${v}`);
  }
  if (rec.features.length !== dim) {
    throw new Error(`record ${rec.id}: expected ${dim} features, got ${rec.features.length}`);
  }
  for (const v of rec.features) {
    if (!Number.isFinite(v)) throw new Error(`record ${rec.id}: non-finite feature value`);
  }
}

export function csvHeader(dim: number): string {
  const cols = ["id", "pred", "truth"];
  for (let i = 0; i < dim; i++) cols.push(`f${i}`);
  return cols.join(",");
}

export function formatEmbeddingsCsv(dim: number, records: EmbeddingRecord[]): string {
  const lines = [csvHeader(dim)];
  for (const rec of records) {
    checkRecord(rec, dim);
    const cells = [String(rec.id), String(rec.pred), String(rec.truth)];
    // String() of the f64 image of an f32 is the shortest round-tripping form
    for (const v of rec.features) cells.push(String(v));
    lines.push(cells.join(","));
  }
  return lines.join("\n") + "\n";
}

export function writeEmbeddingsCsv(path: string, dim: number, records: EmbeddingRecord[]): void {
  writeFileSync(path, formatEmbeddingsCsv(dim, records), "utf-8");
}

export function parseEmbeddingsCsv(text: string): { dim: number; records: EmbeddingRecord[] } {
  const lines = text.split("\n").filter((ln) => ln.trim() !== "");
  if (lines.length === 0) throw new Error("empty embeddings CSV");
  const header = lines[0].split(",");
  if (header[0] !== "id" || header[1] !== "pred" || header[2] !== "truth") {
    throw new Error("line 1: malformed embeddings header");
  }
  const dim = header.length - 3;
  for (let i = 0; i < dim; i++) {
    if (header[3 + i] !== `f${i}`) throw new Error(`line 1: expected column f${i}`);
  }
  const records: EmbeddingRecord[] = [];
  const seen = new Set<number>();
  for (let li = 1; li < lines.length; li++) {
    const cells = lines[li].split(",");
    if (cells.length !== header.length) {
      throw new Error(`line ${li + 1}: expected ${header.length} cells, got ${cells.length}`);
    }
    const id = Number(cells[0]);
    if (!Number.isSafeInteger(id) || id < 0) throw new Error(`line ${li + 1}: bad id ${cells[0]}`);
    if (seen.has(id)) throw new Error(`line ${li + 1}: duplicate id ${id}`);
    seen.add(id);
    const features = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      const v = Number(cells[3 + i]);
      if (!Number.isFinite(v)) throw new Error(`line ${li + 1}: bad feature value ${cells[3 + i]}`);
      features[i] = Math.fround(v);
    }
    const rec = { id, pred: Number(cells[1]), truth: Number(cells[2]), features };
    checkRecord(rec, dim);
    records.push(rec);
  }
  return { dim, records };
}

export function readEmbeddingsCsv(path: string): { dim: number; records: EmbeddingRecord[] } {
  return parseEmbeddingsCsv(readFileSync(path, "utf-8"));
}

export function recordSize(dim: number): number {
  return 8 + 1 + 1 + 4 * dim;
}

export function encodeEmbeddingsBinary(dim: number, records: EmbeddingRecord[]): Buffer {
  const buf = Buffer.alloc(HEADER_SIZE + records.length * recordSize(dim));
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt16LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(dim, 6);
  buf.writeBigUInt64LE(BigInt(records.length), 10);
  let off = HEADER_SIZE;
  for (const rec of records) {
    checkRecord(rec, dim);
    buf.writeBigUInt64LE(BigInt(rec.id), off);
    buf.writeUInt8(rec.pred, off + 8);
    buf.writeUInt8(rec.truth, off + 9);
    for (let i = 0; i < dim; i++) buf.writeFloatLE(rec.features[i], off + 10 + 4 * i);
    off += recordSize(dim);
  }
  return buf;
}

export function writeEmbeddingsBinary(path: string, dim: number, records: EmbeddingRecord[]): void {
  writeFileSync(path, encodeEmbeddingsBinary(dim, records));
}

export function decodeEmbeddingsBinary(buf: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (buf.length < HEADER_SIZE) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 4) !== MAGIC) throw new Error("bad magic");
  const version = buf.readUInt16LE(4);
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported format version ${version}, expected ${FORMAT_VERSION}`);
  }
  const dim = buf.readUInt32LE(6);
  const count = Number(buf.readBigUInt64LE(10));
  const expected = HEADER_SIZE + count * recordSize(dim);
  if (buf.length !== expected) {
    throw new Error(`expected ${expected} bytes, got ${buf.length}`);
  }
  const records: EmbeddingRecord[] = [];
  let off = HEADER_SIZE;
  for (let r = 0; r < count; r++) {
    const rawId = buf.readBigUInt64LE(off);
    if (rawId > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new Error(`record ${r}: id ${rawId} exceeds the safe integer range`);
    }
    const id = Number(rawId);
    const pred = buf.readUInt8(off + 8);
    const truth = buf.readUInt8(off + 9);
    const features = new Float32Array(dim);
    for (let i = 0; i < dim; i++) features[i] = buf.readFloatLE(off + 10 + 4 * i);
    records.push({ id, pred, truth, features });
    off += recordSize(dim);
  }
  return { dim, records };
}

export function readEmbeddingsBinary(path: string): { dim: number; records: EmbeddingRecord[] } {
  return decodeEmbeddingsBinary(readFileSync(path));
}
