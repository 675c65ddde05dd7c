/**
 * Export the pretrained multilingual sentence encoder as a portable
 * inference graph: the ONNX weights and tokenizer files from the
 * transformers.js cache are copied into the output directory together with
 * a checksummed manifest, and reference embeddings for a bilingual sentence
 * fixture are emitted for cross-implementation validation.
 */

import {
  cpSync,
  existsSync,
  mkdirSync,
  readdirSync,
  readFileSync,
  statSync,
} from "node:fs";
import { join } from "node:path";

import { DEFAULT_MODEL_ID, EncoderUnavailableError, TransformersEncoder } from "./encoders.js";
import { writeLyreFile } from "./lyreFormat.js";
import { ExportManifest, checksumFiles, writeManifest } from "./manifest.js";
import { normalizeSentence } from "./pooling.js";

function collectFiles(root: string): string[] {
  const out: string[] = [];
  const walk = (dir: string) => {
    for (const entry of readdirSync(dir, { withFileTypes: true })) {
      const path = join(dir, entry.name);
      if (entry.isDirectory()) {
        walk(path);
      } else {
        out.push(path);
      }
    }
  };
  walk(root);
  return out;
}

export interface ExportResult {
  graphDir: string;
  manifestPath: string;
  referencePath: string;
}

export async function exportGraph(
  modelId: string = DEFAULT_MODEL_ID,
  outDir: string,
  referenceSentences: string[],
): Promise<ExportResult> {
  mkdirSync(outDir, { recursive: true });
  const cacheDir = join(outDir, "cache");
  const encoder = new TransformersEncoder(modelId, cacheDir);

  // loading the pipeline downloads (or reuses) the graph and tokenizer
  const probe = await encoder.encode(["dimension probe"]);
  const dimension = probe[0].length;

  const cachedModelDir = join(cacheDir, modelId);
  if (!existsSync(cachedModelDir) || !statSync(cachedModelDir).isDirectory()) {
    throw new EncoderUnavailableError(
      `expected cached graph at ${cachedModelDir} after loading ${modelId}`,
    );
  }
  const graphDir = join(outDir, "graph");
  cpSync(cachedModelDir, graphDir, { recursive: true });

  const manifest: ExportManifest = {
    encoder: modelId,
    version: 1,
    dimension,
    normalized: true,
    checksum: checksumFiles(collectFiles(graphDir)),
    createdAt: new Date().toISOString(),
  };
  const manifestPath = join(outDir, "manifest.json");
  writeManifest(manifestPath, manifest);

  const vectors = await encoder.encode(referenceSentences);
  const referencePath = join(outDir, "reference.lyre");
  writeLyreFile(
    referencePath,
    vectors.map((values, i) => ({
      id: `ref-${i}`,
      values: normalizeSentence(values),
    })),
  );
  return { graphDir, manifestPath, referencePath };
}

export function loadReferenceSentences(path: string): string[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
}
