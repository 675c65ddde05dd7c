/**
 * Manifests describing exported graphs and precomputed embedding files.
 * The dimension recorded here must equal the dimension written into every
 * produced LYRE file; tests enforce that invariant.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

export interface ExportManifest {
  encoder: string;
  version: number;
  dimension: number;
  normalized: boolean;
  count?: number;
  checksum?: string;
  createdAt: string;
}

export function checksumFiles(paths: string[]): string {
  const hash = createHash("sha256");
  for (const path of [...paths].sort()) {
    hash.update(path.split("/").pop() ?? path);
    hash.update(readFileSync(path));
  }
  return hash.digest("hex");
}

export function writeManifest(path: string, manifest: ExportManifest): void {
  writeFileSync(path, JSON.stringify(manifest, null, 1) + "\n", "utf-8");
}

export function readManifest(path: string): ExportManifest {
  return JSON.parse(readFileSync(path, "utf-8")) as ExportManifest;
}
