import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { approxTokenCount, segment } from "../src/segment.js";

const fixtures = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

interface FixtureChunk {
  text: string;
  approx_tokens: number;
}

interface FixtureCase {
  lyrics: string;
  token_budget: number;
  chunks: FixtureChunk[];
}

describe("segment", () => {
  it("splits at terminal punctuation", () => {
    expect(segment("Hello world! How are you").map((c) => c.text)).toEqual([
      "Hello world!",
      "How are you",
    ]);
  });

  it("enforces the token budget at word boundaries", () => {
    expect(segment("a b c d e", 2).map((c) => c.text)).toEqual(["a b", "c d", "e"]);
    for (const chunk of segment("a b c d e", 2)) {
      expect(chunk.approxTokens).toBeLessThanOrEqual(2);
    }
  });

  it("returns nothing for text without word characters", () => {
    expect(segment("!!! ... ---")).toEqual([]);
  });

  it("splits on line breaks", () => {
    expect(segment("first line\nsecond line").map((c) => c.text)).toEqual([
      "first line",
      "second line",
    ]);
  });

  it("approximates tokens as floor of 1.3 x words", () => {
    expect(approxTokenCount("one two three")).toBe(3);
    expect(approxTokenCount("one two")).toBe(2);
    expect(approxTokenCount("único")).toBe(1);
  });

  it("matches the pipeline exactly on the 50-lyric parity fixture", () => {
    const cases: FixtureCase[] = JSON.parse(
      readFileSync(join(fixtures, "segmentation-parity.json"), "utf-8"),
    );
    expect(cases).toHaveLength(50);
    for (const fixture of cases) {
      const chunks = segment(fixture.lyrics, fixture.token_budget);
      expect(chunks.map((c) => c.text)).toEqual(fixture.chunks.map((c) => c.text));
      expect(chunks.map((c) => c.approxTokens)).toEqual(
        fixture.chunks.map((c) => c.approx_tokens),
      );
    }
  });
});
