import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { MockEncoder } from "../src/encoders.js";
import { readLyreFile } from "../src/lyreFormat.js";
import { readManifest } from "../src/manifest.js";
import { meanPool, normalizeSentence } from "../src/pooling.js";
import {
  CorpusSchemaError,
  exclusionPathFor,
  manifestPathFor,
  precomputeCorpus,
  readCorpusJsonl,
} from "../src/precompute.js";

function writeCorpus(dir: string, records: object[]): string {
  const path = join(dir, "corpus.jsonl");
  writeFileSync(path, records.map((r) => JSON.stringify(r)).join("\n") + "\n");
  return path;
}

const tmp = () => mkdtempSync(join(tmpdir(), "lyre-export-"));

describe("corpus reading", () => {
  it("reads the pipeline JSONL schema", () => {
    const dir = tmp();
    const path = writeCorpus(dir, [
      { id: "a", lyrics: "la la la", language: "pt", genres: ["Rock"] },
      { id: "b", lyrics: "na na na", language: "en", genres: ["Pop"] },
    ]);
    expect(readCorpusJsonl(path).map((r) => r.id)).toEqual(["a", "b"]);
  });

  it("names the missing field on schema errors", () => {
    const dir = tmp();
    const path = writeCorpus(dir, [{ id: "a" }]);
    expect(() => readCorpusJsonl(path)).toThrow(/lyrics/);
  });
});

describe("precompute", () => {
  it("writes a loadable LYRE file with matching manifest", async () => {
    const dir = tmp();
    const corpus = writeCorpus(dir, [
      { id: "one", lyrics: "first line.\nsecond line" },
      { id: "two", lyrics: "uma frase só" },
    ]);
    const out = join(dir, "vectors.lyre");
    const result = await precomputeCorpus(corpus, out, new MockEncoder(3, 16));
    expect(result.written).toBe(2);
    const { dimension, records } = readLyreFile(out);
    expect(dimension).toBe(16);
    expect(records.map((r) => r.id)).toEqual(["one", "two"]);
    const manifest = readManifest(manifestPathFor(out));
    expect(manifest.dimension).toBe(16);
    expect(manifest.count).toBe(2);
    expect(manifest.normalized).toBe(true);
  });

  it("pools a one-sentence song to exactly the sentence vector", async () => {
    const dir = tmp();
    const text = "uma frase sem pausas nem pontuação";
    const corpus = writeCorpus(dir, [{ id: "solo", lyrics: text }]);
    const out = join(dir, "solo.lyre");
    const encoder = new MockEncoder(9, 12);
    await precomputeCorpus(corpus, out, encoder);
    const { records } = readLyreFile(out);
    const [sentenceVector] = await encoder.encode([text]);
    const expected = normalizeSentence(sentenceVector);
    expect(Buffer.from(records[0].values.buffer)).toEqual(
      Buffer.from(expected.buffer),
    );
  });

  it("keeps every component within [-1, 1]", async () => {
    const dir = tmp();
    const corpus = writeCorpus(dir, [
      { id: "a", lyrics: "line one. line two! line three?" },
      { id: "b", lyrics: "mais uma linha; e outra: e a última" },
    ]);
    const out = join(dir, "bounded.lyre");
    await precomputeCorpus(corpus, out, new MockEncoder(1, 8));
    for (const record of readLyreFile(out).records) {
      for (const value of record.values) {
        expect(Math.abs(value)).toBeLessThanOrEqual(1.0);
      }
    }
  });

  it("skips degenerate lyrics into the sidecar file", async () => {
    const dir = tmp();
    const corpus = writeCorpus(dir, [
      { id: "good", lyrics: "words exist here" },
      { id: "empty", lyrics: "?!..." },
    ]);
    const out = join(dir, "partial.lyre");
    const result = await precomputeCorpus(corpus, out, new MockEncoder(2, 8));
    expect(result.written).toBe(1);
    expect(result.skipped).toEqual([
      { id: "empty", reason: "no embeddable sentences" },
    ]);
    const sidecar = readFileSync(exclusionPathFor(out), "utf-8");
    expect(sidecar).toContain("empty\tno embeddable sentences");
  });

  it("mean pooling matches a direct average of normalized sentences", async () => {
    const encoder = new MockEncoder(5, 10);
    const sentences = ["one two three", "quatro cinco seis", "seven eight"];
    const vectors = (await encoder.encode(sentences)).map(normalizeSentence);
    const pooled = meanPool(vectors);
    for (let i = 0; i < pooled.length; i += 1) {
      let sum = 0;
      for (const vec of vectors) {
        sum += vec[i];
      }
      expect(pooled[i]).toBeCloseTo(Math.fround(sum / vectors.length), 7);
    }
  });

  it("rejects a corpus with nothing embeddable", async () => {
    const dir = tmp();
    const corpus = writeCorpus(dir, [{ id: "x", lyrics: "..." }]);
    await expect(
      precomputeCorpus(corpus, join(dir, "never.lyre"), new MockEncoder(0, 4)),
    ).rejects.toThrow(CorpusSchemaError);
  });
});

describe("cross-component round trip", () => {
  it("produces files the pipeline loads with the declared dimension", async () => {
    const dir = tmp();
    const corpus = writeCorpus(dir, [
      { id: "song-1", lyrics: "hold the note. hold the line" },
      { id: "canção-2", lyrics: "segura a nota; segura a linha" },
    ]);
    const out = join(dir, "cross.lyre");
    await precomputeCorpus(corpus, out, new MockEncoder(4, 24));
    let loaded: string;
    try {
      loaded = execFileSync(
        "python3",
        [
          "-c",
          [
            "import sys, json",
            "from lyre.embedding import load_embedding_file",
            "table = load_embedding_file(sys.argv[1])",
            "first = next(iter(table.values()))",
            "print(json.dumps({'count': len(table), 'dimension': first.dimension,",
            "                  'ids': sorted(table)}))",
          ].join("\n"),
          out,
        ],
        { encoding: "utf-8" },
      );
    } catch {
      console.warn("pipeline package unavailable; skipping python round trip");
      return;
    }
    const summary = JSON.parse(loaded);
    expect(summary.count).toBe(2);
    expect(summary.dimension).toBe(24);
    expect(summary.ids).toEqual(["canção-2", "song-1"]);
  });
});
