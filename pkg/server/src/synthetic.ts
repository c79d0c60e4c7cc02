/**
 * The synthetic generator/embedder, numerically identical to the client's
 * in-process backend. Matrix entries are signed multiples of 2^-20 drawn
 * from the splitmix64 stream of the model seed (identity matrix row-major
 * first, then the attribute matrix); dot products against sign vectors are
 * therefore exact in float64 regardless of summation order, and the final
 * division by sqrt(D) plus float32 rounding is correctly rounded on every
 * platform. Emitted embeddings are f32 values held in doubles.
 */

import { MASK64, streamWord } from "./splitmix.js";

const ENTRY_BITS = 20;
const ENTRY_OFFSET = 1 << ENTRY_BITS;
const ENTRY_SCALE = 2 ** -ENTRY_BITS;

/** Latents with sup-norm beyond this squash outside [0, 1]. */
export const MAX_AMPLITUDE = 32;

export interface SyntheticModel {
  latentDim: number;
  embeddingDim: number;
  attributeDim: number;
  seed: number;
  /** row-major (embeddingDim x latentDim) */
  aRaw: Float64Array;
  /** row-major (attributeDim x latentDim) */
  bRaw: Float64Array;
  sqrtDim: number;
  squashOffset: number;
  squashScale: number;
}

function matrixEntries(seed: bigint, start: number, count: number): Float64Array {
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    const t = Number(streamWord(seed, start + i) >> BigInt(64 - ENTRY_BITS - 1));
    out[i] = (t - ENTRY_OFFSET) * ENTRY_SCALE;
  }
  return out;
}

export function buildModel(
  latentDim: number,
  embeddingDim: number,
  attributeDim: number,
  seed: number,
): SyntheticModel {
  if (latentDim < 1 || embeddingDim < 1 || attributeDim < 1) {
    throw new Error("synthetic dims must all be >= 1");
  }
  const seedBig = BigInt(seed) & MASK64;
  const sqrtDim = Math.sqrt(latentDim);
  return {
    latentDim,
    embeddingDim,
    attributeDim,
    seed,
    aRaw: matrixEntries(seedBig, 0, embeddingDim * latentDim),
    bRaw: matrixEntries(seedBig, embeddingDim * latentDim, attributeDim * latentDim),
    sqrtDim,
    squashOffset: 0.5,
    squashScale: 2 * MAX_AMPLITUDE * sqrtDim,
  };
}

export function sgn(x: number): number {
  return x > 0 ? 1 : x < 0 ? -1 : 0;
}

function checkLatent(model: SyntheticModel, z: readonly number[]): void {
  if (z.length !== model.latentDim) {
    throw new Error(`latent has length ${z.length}, expected ${model.latentDim}`);
  }
  for (const v of z) {
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new Error("latent contains non-finite values");
    }
  }
}

/** Fused generate+embed: f32-rounded (A . sgn(z)) / sqrt(D). */
export function embedLatent(model: SyntheticModel, z: readonly number[]): number[] {
  checkLatent(model, z);
  const { aRaw, latentDim, embeddingDim, sqrtDim } = model;
  const signs = z.map(sgn);
  const out = new Array<number>(embeddingDim);
  for (let i = 0; i < embeddingDim; i++) {
    let acc = 0;
    const row = i * latentDim;
    for (let j = 0; j < latentDim; j++) {
      acc += aRaw[row + j] * signs[j];
    }
    out[i] = Math.fround(acc / sqrtDim);
  }
  return out;
}

/** Surrogate image pixels: squashed [A.sgn(z); B.z] / sqrt(D). */
export function generatePixels(model: SyntheticModel, z: readonly number[]): Float64Array {
  checkLatent(model, z);
  let amplitude = 0;
  for (const v of z) amplitude = Math.max(amplitude, Math.abs(v));
  if (amplitude > MAX_AMPLITUDE) {
    throw new Error(
      `latent sup-norm ${amplitude} exceeds the synthetic generator's squash range (${MAX_AMPLITUDE})`,
    );
  }
  const { aRaw, bRaw, latentDim, embeddingDim, attributeDim, sqrtDim } = model;
  const signs = z.map(sgn);
  const pixels = new Float64Array(embeddingDim + attributeDim);
  for (let i = 0; i < embeddingDim; i++) {
    let acc = 0;
    const row = i * latentDim;
    for (let j = 0; j < latentDim; j++) acc += aRaw[row + j] * signs[j];
    pixels[i] = model.squashOffset + acc / sqrtDim / model.squashScale;
  }
  for (let i = 0; i < attributeDim; i++) {
    let acc = 0;
    const row = i * latentDim;
    for (let j = 0; j < latentDim; j++) acc += bRaw[row + j] * z[j];
    pixels[embeddingDim + i] = model.squashOffset + acc / sqrtDim / model.squashScale;
  }
  return pixels;
}

/** Un-squash the identity block of an image; f32-rounded like embedLatent. */
export function embedPixels(model: SyntheticModel, pixels: ArrayLike<number>): number[] {
  const expected = model.embeddingDim + model.attributeDim;
  if (pixels.length !== expected) {
    throw new Error(`image holds ${pixels.length} values, expected ${expected}`);
  }
  const out = new Array<number>(model.embeddingDim);
  for (let i = 0; i < model.embeddingDim; i++) {
    out[i] = Math.fround((pixels[i] - model.squashOffset) * model.squashScale);
  }
  return out;
}
