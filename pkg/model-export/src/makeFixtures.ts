/**
 * Regenerate fixtures/out/: a small corpus precomputed with the mock
 * encoder, used by the pipeline's cross-component round-trip test.
 * Deterministic, so reruns leave the files unchanged byte for byte
 * (manifests record a creation timestamp and are rewritten).
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { MockEncoder } from "./encoders.js";
import { precomputeCorpus } from "./precompute.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtures = join(here, "..", "..", "fixtures");
const outDir = join(fixtures, "out");

const corpus = [
  { id: "sample-1", lyrics: "the river sang all night.\nwe hummed along until dawn" },
  { id: "sample-2", lyrics: "uma canção antiga tocava na cozinha; todo mundo dançou" },
  { id: "sample-3", lyrics: "hold the note! hold it longer than the storm" },
  { id: "canção-4", lyrics: "primeiro verso.\nsegundo verso?\nterceiro e último" },
  { id: "sample-5", lyrics: "?!..." },
];

async function main() {
  mkdirSync(outDir, { recursive: true });
  const corpusPath = join(outDir, "sample-corpus.jsonl");
  writeFileSync(
    corpusPath,
    corpus.map((r) => JSON.stringify(r)).join("\n") + "\n",
    "utf-8",
  );
  const result = await precomputeCorpus(
    corpusPath,
    join(outDir, "sample.lyre"),
    new MockEncoder(7, 24),
  );
  console.log(
    `fixtures/out: ${result.written} embeddings, ${result.skipped.length} skipped`,
  );
}

main().catch((error) => {
  console.error(error);
  process.exitCode = 1;
});
