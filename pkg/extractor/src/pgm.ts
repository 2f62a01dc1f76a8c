/** Minimal PGM (portable graymap) codec.
 *
 * Handles binary P5 and ascii P2, 8-bit, which covers grayscale surface
 * inspection imagery once converted from BMP/JPEG, e.g.
 * `magick input.bmp output.pgm` or PIL's `Image.open(p).convert("L")`.
 */
import { readFileSync, writeFileSync } from "node:fs";

export interface GrayImage {
  width: number;
  height: number;
  /** row-major, one byte per pixel */
  pixels: Uint8Array;
}

class Scanner {
  constructor(private buf: Buffer, public pos = 0) {}

  /** next whitespace-delimited token, skipping `#` comment lines */
  token(): string {
    for (;;) {
      while (this.pos < this.buf.length && isSpace(this.buf[this.pos])) this.pos++;
      if (this.pos < this.buf.length && this.buf[this.pos] === 0x23) {
        while (this.pos < this.buf.length && this.buf[this.pos] !== 0x0a) this.pos++;
        continue;
      }
      break;
    }
    const start = this.pos;
    while (this.pos < this.buf.length && !isSpace(this.buf[this.pos])) this.pos++;
    if (start === this.pos) throw new Error("unexpected end of PGM header");
    return this.buf.toString("ascii", start, this.pos);
  }

  int(what: string): number {
    const tok = this.token();
    const n = Number(tok);
    if (!Number.isInteger(n) || n < 0) throw new Error(`bad PGM ${what}: ${tok}`);
    return n;
  }
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}

export function decodePgm(buf: Buffer): GrayImage {
  const s = new Scanner(buf);
  const magic = s.token();
  if (magic !== "P5" && magic !== "P2") throw new Error(`not a PGM file (magic ${magic})`);
  const width = s.int("width");
  const height = s.int("height");
  const maxval = s.int("maxval");
  if (width === 0 || height === 0) throw new Error("empty PGM image");
  if (maxval === 0 || maxval > 255) throw new Error(`unsupported PGM maxval ${maxval}`);
  const n = width * height;
  const pixels = new Uint8Array(n);
  if (magic === "P5") {
    const start = s.pos + 1; // single whitespace byte after maxval
    if (buf.length < start + n) throw new Error("truncated PGM pixel data");
    pixels.set(buf.subarray(start, start + n));
  } else {
    for (let i = 0; i < n; i++) {
      const v = s.int("pixel");
      if (v > maxval) throw new Error(`pixel ${v} exceeds maxval ${maxval}`);
      pixels[i] = v;
    }
  }
  if (maxval !== 255) {
    for (let i = 0; i < n; i++) pixels[i] = Math.round((pixels[i] * 255) / maxval);
  }
  return { width, height, pixels };
}

export function encodePgm(img: GrayImage): Buffer {
  const header = Buffer.from(`P5\n${img.width} ${img.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(img.pixels)]);
}

export function readPgm(path: string): GrayImage {
  return decodePgm(readFileSync(path));
}

export function writePgm(path: string, img: GrayImage): void {
  writeFileSync(path, encodePgm(img));
}

/** Nearest-neighbor resize; surface textures tolerate it fine. */
export function resize(img: GrayImage, width: number, height: number): GrayImage {
  if (img.width === width && img.height === height) return img;
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const sy = Math.min(img.height - 1, Math.floor((y * img.height) / height));
    for (let x = 0; x < width; x++) {
      const sx = Math.min(img.width - 1, Math.floor((x * img.width) / width));
      out[y * width + x] = img.pixels[sy * img.width + sx];
    }
  }
  return { width, height, pixels: out };
}

/** Pixels scaled to [0, 1] floats for model input. */
export function toFloats(img: GrayImage): Float32Array {
  const out = new Float32Array(img.pixels.length);
  for (let i = 0; i < img.pixels.length; i++) out[i] = img.pixels[i] / 255;
  return out;
}
