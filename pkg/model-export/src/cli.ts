#!/usr/bin/env node
/**
 * lyre-export: batch tool with two jobs.
 *
 *   export-graph --output DIR [--model ID] [--reference FILE]
 *   precompute   --corpus FILE.jsonl --output FILE.lyre [--encoder SPEC]
 *                [--token-budget N]
 *
 * Encoder specs: `xenova:<model-id>` (real encoder via transformers.js) or
 * `mock:<seed>[:<dim>]` (deterministic stand-in).
 */

import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { EncoderUnavailableError, resolveEncoder, DEFAULT_MODEL_ID } from "./encoders.js";
import { exportGraph, loadReferenceSentences } from "./exportGraph.js";
import { precomputeCorpus } from "./precompute.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new UsageError(`bad argument pair near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

class UsageError extends Error {}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (!value) {
    throw new UsageError(`missing required flag --${name}`);
  }
  return value;
}

async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "export-graph") {
      const flags = parseFlags(rest);
      const outDir = need(flags, "output");
      const modelId = flags.get("model") ?? DEFAULT_MODEL_ID;
      const referenceFile =
        flags.get("reference") ??
        join(dirname(fileURLToPath(import.meta.url)), "..", "..",
             "fixtures", "reference-sentences.txt");
      const sentences = loadReferenceSentences(referenceFile);
      const result = await exportGraph(modelId, outDir, sentences);
      console.log(`graph: ${result.graphDir}`);
      console.log(`manifest: ${result.manifestPath}`);
      console.log(`reference embeddings: ${result.referencePath}`);
      return 0;
    }
    if (command === "precompute") {
      const flags = parseFlags(rest);
      const corpus = need(flags, "corpus");
      const output = need(flags, "output");
      const encoder = resolveEncoder(flags.get("encoder") ?? `xenova:${DEFAULT_MODEL_ID}`);
      const budget = Number(flags.get("token-budget") ?? "128");
      const result = await precomputeCorpus(corpus, output, encoder, budget);
      console.log(
        `wrote ${result.written} embeddings (dimension ${result.dimension}), ` +
        `skipped ${result.skipped.length}`,
      );
      return 0;
    }
    throw new UsageError(`unknown command ${command ?? "(none)"}`);
  } catch (error) {
    if (error instanceof UsageError) {
      console.error(`usage error: ${error.message}`);
      return 1;
    }
    if (error instanceof EncoderUnavailableError) {
      console.error(`encoder unavailable: ${error.message}`);
      return 3;
    }
    console.error(String(error instanceof Error ? error.message : error));
    return 2;
  }
}

main(process.argv.slice(2)).then((code) => {
  process.exitCode = code;
});
