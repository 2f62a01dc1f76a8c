/** Procedural grayscale texture dataset for hermetic tests and demos.
 *
 * Each class is an oriented sinusoidal grating with class-specific frequency
 * and angle plus pixel noise: cheap to generate, easy for a small classifier
 * to separate, and visually in the spirit of surface-texture imagery.
 */
import { mkdirSync } from "node:fs";
import { join } from "node:path";

import { GrayImage, writePgm } from "./pgm.js";
import { gaussian, mulberry32 } from "./rng.js";

export interface SyntheticSpec {
  classes: string[];
  imagesPerClass: number;
  size: number;
  seed: number;
  /** pixel noise amplitude in gray levels */
  noise: number;
}

export function textureImage(
  classIndex: number,
  size: number,
  rand: () => number,
  noise: number,
): GrayImage {
  const freq = 2 + classIndex * 2.5;
  const angle = (classIndex * 37 * Math.PI) / 180;
  const phase = rand() * 2 * Math.PI;
  const cos = Math.cos(angle);
  const sin = Math.sin(angle);
  const pixels = new Uint8Array(size * size);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const u = (x / size) * cos + (y / size) * sin;
      const base = 128 + 100 * Math.sin(2 * Math.PI * freq * u + phase);
      const v = base + noise * gaussian(rand);
      pixels[y * size + x] = Math.max(0, Math.min(255, Math.round(v)));
    }
  }
  return { width: size, height: size, pixels };
}

/** Writes class-per-directory PGM files; returns the dataset root. */
export function generateDataset(rootDir: string, spec: SyntheticSpec): string {
  const rand = mulberry32(spec.seed);
  for (let c = 0; c < spec.classes.length; c++) {
    const classDir = join(rootDir, spec.classes[c]);
    mkdirSync(classDir, { recursive: true });
    for (let i = 0; i < spec.imagesPerClass; i++) {
      const img = textureImage(c, spec.size, rand, spec.noise);
      const name = `img_${String(i).padStart(4, "0")}.pgm`;
      writePgm(join(classDir, name), img);
    }
  }
  return rootDir;
}
