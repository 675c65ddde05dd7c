/**
 * LYRE embedding file: little-endian binary with magic "LYRE", u32 version
 * (1), u32 dimension, u64 count, then per record a u32 id byte-length, the
 * UTF-8 id, and dimension x float32. Round trips are bit-exact.
 */

import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = Buffer.from("LYRE", "ascii");
const VERSION = 1;

export interface EmbeddingRecord {
  id: string;
  values: Float32Array;
}

export class LyreFormatError extends Error {}

export function encodeLyre(records: EmbeddingRecord[]): Buffer {
  if (records.length === 0) {
    throw new LyreFormatError("refusing to encode an empty embedding file");
  }
  const dimension = records[0].values.length;
  const parts: Buffer[] = [];
  const header = Buffer.alloc(4 + 4 + 4 + 8);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(dimension, 8);
  header.writeBigUInt64LE(BigInt(records.length), 12);
  parts.push(header);
  for (const record of records) {
    if (record.values.length !== dimension) {
      throw new LyreFormatError(
        `record ${record.id} has dimension ${record.values.length}, file dimension is ${dimension}`,
      );
    }
    const idBytes = Buffer.from(record.id, "utf-8");
    const prefix = Buffer.alloc(4);
    prefix.writeUInt32LE(idBytes.length, 0);
    const vector = Buffer.alloc(dimension * 4);
    for (let i = 0; i < dimension; i += 1) {
      vector.writeFloatLE(record.values[i], i * 4);
    }
    parts.push(prefix, idBytes, vector);
  }
  return Buffer.concat(parts);
}

export function decodeLyre(data: Buffer): { dimension: number; records: EmbeddingRecord[] } {
  if (data.length < 20 || !data.subarray(0, 4).equals(MAGIC)) {
    throw new LyreFormatError("bad magic bytes");
  }
  const version = data.readUInt32LE(4);
  if (version !== VERSION) {
    throw new LyreFormatError(`unsupported version ${version}`);
  }
  const dimension = data.readUInt32LE(8);
  const count = Number(data.readBigUInt64LE(12));
  let offset = 20;
  const records: EmbeddingRecord[] = [];
  const seen = new Set<string>();
  for (let i = 0; i < count; i += 1) {
    if (offset + 4 > data.length) {
      throw new LyreFormatError("truncated before an id length");
    }
    const idLength = data.readUInt32LE(offset);
    offset += 4;
    const vectorBytes = dimension * 4;
    if (offset + idLength + vectorBytes > data.length) {
      throw new LyreFormatError("truncated record payload");
    }
    const id = data.subarray(offset, offset + idLength).toString("utf-8");
    offset += idLength;
    const values = new Float32Array(dimension);
    for (let j = 0; j < dimension; j += 1) {
      values[j] = data.readFloatLE(offset + j * 4);
    }
    offset += vectorBytes;
    if (seen.has(id)) {
      throw new LyreFormatError(`duplicate record id ${id}`);
    }
    seen.add(id);
    records.push({ id, values });
  }
  if (offset !== data.length) {
    throw new LyreFormatError(`${data.length - offset} trailing bytes`);
  }
  return { dimension, records };
}

export function writeLyreFile(path: string, records: EmbeddingRecord[]): void {
  writeFileSync(path, encodeLyre(records));
}

export function readLyreFile(path: string): { dimension: number; records: EmbeddingRecord[] } {
  return decodeLyre(readFileSync(path));
}
