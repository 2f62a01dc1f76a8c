import { describe, expect, it } from "vitest";

import {
  EmbeddingRecord,
  FORMAT_VERSION,
  HEADER_SIZE,
  csvHeader,
  decodeEmbeddingsBinary,
  encodeEmbeddingsBinary,
  formatEmbeddingsCsv,
  parseEmbeddingsCsv,
  recordSize,
} from "../src/dataio.js";

function rec(id: number, pred: number, truth: number, values: number[]): EmbeddingRecord {
  return { id, pred, truth, features: Float32Array.from(values) };
}

describe("embeddings csv", () => {
  it("writes the fixed header layout", () => {
    expect(csvHeader(3)).toBe("id,pred,truth,f0,f1,f2");
  });

  it("round trips records including awkward f32 values", () => {
    const records = [
      rec(0, 0, 0, [0.1, -2.5, 1e-8]),
      rec(7, 1, 2, [3.14159, 0, -0.0000123]),
    ];
    const text = formatEmbeddingsCsv(3, records);
    const back = parseEmbeddingsCsv(text);
    expect(back.dim).toBe(3);
    expect(back.records.length).toBe(2);
    for (let i = 0; i < records.length; i++) {
      expect(back.records[i].id).toBe(records[i].id);
      expect([...back.records[i].features]).toEqual([...records[i].features]);
    }
    // and the text itself is a fixpoint
    expect(formatEmbeddingsCsv(3, back.records)).toBe(text);
  });

  it("rejects duplicate ids with a line number", () => {
    const text = "id,pred,truth,f0\n1,0,0,0.5\n1,0,0,0.25\n";
    expect(() => parseEmbeddingsCsv(text)).toThrow(/line 3: duplicate id 1/);
  });

  it("rejects malformed headers and ragged rows", () => {
    expect(() => parseEmbeddingsCsv("id,truth,pred,f0\n")).toThrow(/line 1/);
    expect(() => parseEmbeddingsCsv("id,pred,truth,f0,f2\n")).toThrow(/f1/);
    expect(() => parseEmbeddingsCsv("id,pred,truth,f0\n1,0,0\n")).toThrow(/line 2/);
  });

  it("rejects non-finite features at write time", () => {
    expect(() => formatEmbeddingsCsv(1, [rec(1, 0, 0, [NaN])])).toThrow(/non-finite/);
  });

  it("rejects wrong feature count naming the record", () => {
    expect(() => formatEmbeddingsCsv(2, [rec(9, 0, 0, [1])])).toThrow(/record 9/);
  });
});

describe("embeddings binary", () => {
  it("has the documented header and record sizes", () => {
    expect(HEADER_SIZE).toBe(18);
    expect(recordSize(4)).toBe(26);
  });

  it("lays out the header byte for byte", () => {
    const buf = encodeEmbeddingsBinary(2, [rec(258, 1, 2, [1.5, -2])]);
    expect(buf.length).toBe(18 + 18);
    expect(buf.toString("ascii", 0, 4)).toBe("DFE1");
    expect(buf.readUInt16LE(4)).toBe(FORMAT_VERSION);
    expect(buf.readUInt32LE(6)).toBe(2);
    expect(buf.readBigUInt64LE(10)).toBe(1n);
    expect(buf.readBigUInt64LE(18)).toBe(258n);
    expect(buf.readUInt8(26)).toBe(1);
    expect(buf.readUInt8(27)).toBe(2);
    expect(buf.readFloatLE(28)).toBe(1.5);
    expect(buf.readFloatLE(32)).toBe(-2);
  });

  it("round trips through binary", () => {
    const records = [rec(0, 0, 0, [0.25, 0.5]), rec(1, 1, 2, [-1, 9.75])];
    const back = decodeEmbeddingsBinary(encodeEmbeddingsBinary(2, records));
    expect(back.dim).toBe(2);
    expect(back.records.map((r) => [...r.features])).toEqual(records.map((r) => [...r.features]));
  });

  it("rejects corruption with specific messages", () => {
    const buf = encodeEmbeddingsBinary(1, [rec(1, 0, 0, [0.5])]);
    const badMagic = Buffer.from(buf);
    badMagic.write("XXXX", 0, "ascii");
    expect(() => decodeEmbeddingsBinary(badMagic)).toThrow(/bad magic/);
    expect(() => decodeEmbeddingsBinary(buf.subarray(0, buf.length - 2))).toThrow(/expected \d+ bytes/);
    expect(() => decodeEmbeddingsBinary(buf.subarray(0, 10))).toThrow(/truncated header/);
    const badVersion = Buffer.from(buf);
    badVersion.writeUInt16LE(9, 4);
    expect(() => decodeEmbeddingsBinary(badVersion)).toThrow(/version 9/);
  });

  it("rejects ids beyond the safe integer range on decode", () => {
    const buf = encodeEmbeddingsBinary(1, [rec(1, 0, 0, [0.5])]);
    buf.writeBigUInt64LE(2n ** 60n, 18);
    expect(() => decodeEmbeddingsBinary(buf)).toThrow(/safe integer/);
  });

  it("csv and binary agree", () => {
    const records = [rec(3, 0, 0, [0.1, 0.2, 0.3]), rec(4, 1, 2, [7, 8, 9])];
    const viaCsv = parseEmbeddingsCsv(formatEmbeddingsCsv(3, records)).records;
    const viaBin = decodeEmbeddingsBinary(encodeEmbeddingsBinary(3, records)).records;
    expect(viaCsv.map((r) => [...r.features])).toEqual(viaBin.map((r) => [...r.features]));
  });
});
