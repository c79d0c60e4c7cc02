/**
 * Counter-based splitmix64 stream, matching the latentprobe client bit for
 * bit: word i of a stream is mix64(seed + (i + 1) * GAMMA) mod 2^64, and a
 * unit draw is the top 53 bits of the word scaled by 2^-53. The synthetic
 * model matrices are derived from this stream, so both ecosystems build
 * identical models from the same seed.
 */

export const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX_MUL1 = 0xbf58476d1ce4e5b9n;
const MIX_MUL2 = 0x94d049bb133111ebn;

export function mix64(x: bigint): bigint {
  x &= MASK64;
  x = ((x ^ (x >> 30n)) * MIX_MUL1) & MASK64;
  x = ((x ^ (x >> 27n)) * MIX_MUL2) & MASK64;
  return x ^ (x >> 31n);
}

export function streamWord(seed: bigint, index: number): bigint {
  return mix64((seed + (BigInt(index) + 1n) * GAMMA) & MASK64);
}

/** Uniform draw in [0, 1) from a stream word; exact in an IEEE double. */
export function unitFromWord(word: bigint): number {
  return Number(word >> 11n) * 2 ** -53;
}
