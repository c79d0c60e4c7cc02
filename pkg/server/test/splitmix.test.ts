import { describe, expect, it } from "vitest";

import { mix64, streamWord, unitFromWord } from "../src/splitmix.js";

// Frozen stream head for seed 42, shared with the Python client's tests;
// both implementations must reproduce these exactly.
const GOLDEN_WORDS_SEED42 = [
  0xbdd732262feb6e95n,
  0x28efe333b266f103n,
  0x47526757130f9f52n,
  0x581ce1ff0e4ae394n,
];
const GOLDEN_UNIT_SEED42 = [
  0.7415648787718233, 0.1599103928769201, 0.27860113025513866, 0.34419071652363753,
];

describe("splitmix64", () => {
  it("reproduces the frozen stream head", () => {
    for (let i = 0; i < 4; i++) {
      expect(streamWord(42n, i)).toBe(GOLDEN_WORDS_SEED42[i]);
    }
  });

  it("maps words to exact unit doubles", () => {
    for (let i = 0; i < 4; i++) {
      expect(unitFromWord(GOLDEN_WORDS_SEED42[i])).toBe(GOLDEN_UNIT_SEED42[i]);
    }
  });

  it("wraps modulo 2^64", () => {
    expect(mix64((1n << 64n) + 5n)).toBe(mix64(5n));
  });

  it("is deterministic", () => {
    expect(streamWord(123n, 7)).toBe(streamWord(123n, 7));
  });
});
