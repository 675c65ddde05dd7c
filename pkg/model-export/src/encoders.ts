/**
 * Sentence encoder backends. The real multilingual encoder loads through
 * transformers.js when the optional dependency and model weights are
 * available; the mock encoder is a deterministic stand-in for format and
 * parity testing.
 */

import { createHash } from "node:crypto";

export interface SentenceEncoder {
  readonly name: string;
  readonly dimension: number;
  encode(sentences: string[]): Promise<Float32Array[]>;
}

export class EncoderUnavailableError extends Error {}

export const DEFAULT_MODEL_ID = "Xenova/paraphrase-multilingual-mpnet-base-v2";

export class MockEncoder implements SentenceEncoder {
  readonly name: string;
  readonly dimension: number;
  private readonly seed: number;

  constructor(seed: number, dimension = 32) {
    if (dimension < 1) {
      throw new Error("dimension must be >= 1");
    }
    this.seed = seed;
    this.dimension = dimension;
    this.name = `mock:${seed}`;
  }

  private vectorFor(sentence: string): Float32Array {
    const out = new Float32Array(this.dimension);
    let filled = 0;
    let counter = 0;
    while (filled < this.dimension) {
      const digest = createHash("sha256")
        .update(`${this.seed}${counter}${sentence}`)
        .digest();
      for (let i = 0; i + 2 <= digest.length && filled < this.dimension; i += 2) {
        const raw = digest.readUInt16LE(i);
        out[filled] = Math.fround((raw / 65535) * 2 - 1);
        filled += 1;
      }
      counter += 1;
    }
    return out;
  }

  async encode(sentences: string[]): Promise<Float32Array[]> {
    return sentences.map((s) => this.vectorFor(s));
  }
}

interface TransformersPipeline {
  (texts: string[], options: Record<string, unknown>): Promise<{
    dims: number[];
    data: Float32Array | number[];
  }>;
}

export class TransformersEncoder implements SentenceEncoder {
  readonly name: string;
  dimension = 0;
  private pipeline: TransformersPipeline | null = null;
  private readonly cacheDir?: string;

  constructor(modelId: string = DEFAULT_MODEL_ID, cacheDir?: string) {
    this.name = modelId;
    this.cacheDir = cacheDir;
  }

  private async load(): Promise<TransformersPipeline> {
    if (this.pipeline) {
      return this.pipeline;
    }
    let transformers;
    try {
      transformers = await import("@xenova/transformers");
    } catch (error) {
      throw new EncoderUnavailableError(
        `transformers.js is not installed (optional dependency): ${String(error)}`,
      );
    }
    try {
      if (this.cacheDir) {
        transformers.env.cacheDir = this.cacheDir;
      }
      this.pipeline = (await transformers.pipeline(
        "feature-extraction",
        this.name,
      )) as unknown as TransformersPipeline;
      return this.pipeline;
    } catch (error) {
      throw new EncoderUnavailableError(
        `encoder ${this.name} could not be loaded (network or cache): ${String(error)}`,
      );
    }
  }

  async encode(sentences: string[]): Promise<Float32Array[]> {
    const pipe = await this.load();
    // token-level mean pooling gives the sentence embedding; sentence-level
    // L2 normalization happens in the pooling stage, not here
    const output = await pipe(sentences, { pooling: "mean", normalize: false });
    const [rows, dimension] = output.dims.slice(-2);
    this.dimension = dimension;
    const flat = output.data instanceof Float32Array
      ? output.data
      : Float32Array.from(output.data);
    const vectors: Float32Array[] = [];
    for (let row = 0; row < rows; row += 1) {
      vectors.push(flat.slice(row * dimension, (row + 1) * dimension));
    }
    return vectors;
  }
}

export function resolveEncoder(spec: string, cacheDir?: string): SentenceEncoder {
  const [kind, ...rest] = spec.split(":");
  if (kind === "mock") {
    const seed = Number(rest[0] ?? "0");
    if (!Number.isInteger(seed)) {
      throw new Error(`mock encoder needs an integer seed, got ${spec}`);
    }
    const dimension = rest[1] ? Number(rest[1]) : 32;
    return new MockEncoder(seed, dimension);
  }
  if (kind === "xenova") {
    return new TransformersEncoder(rest.join(":") || DEFAULT_MODEL_ID, cacheDir);
  }
  throw new Error(`unknown encoder spec ${spec}`);
}
