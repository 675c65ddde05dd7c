/**
 * Song vectors from sentence vectors: per-sentence L2 normalization (which
 * guarantees every component lies in [-1, 1]) followed by the arithmetic
 * mean, accumulated in float64 and rounded to float32 for storage.
 */

export function normalizeSentence(vector: Float32Array): Float32Array {
  let sumSquares = 0;
  for (let i = 0; i < vector.length; i += 1) {
    sumSquares += vector[i] * vector[i];
  }
  const norm = Math.sqrt(sumSquares);
  const out = new Float32Array(vector.length);
  if (norm > 0) {
    for (let i = 0; i < vector.length; i += 1) {
      out[i] = Math.fround(vector[i] / norm);
    }
  }
  return out;
}

export function meanPool(vectors: Float32Array[]): Float32Array {
  if (vectors.length === 0) {
    throw new Error("cannot pool an empty list of vectors");
  }
  const dimension = vectors[0].length;
  const accumulator = new Float64Array(dimension);
  for (const vector of vectors) {
    if (vector.length !== dimension) {
      throw new Error(
        `vector has dimension ${vector.length}, expected ${dimension}`,
      );
    }
    for (let i = 0; i < dimension; i += 1) {
      accumulator[i] += vector[i];
    }
  }
  const out = new Float32Array(dimension);
  for (let i = 0; i < dimension; i += 1) {
    out[i] = Math.fround(accumulator[i] / vectors.length);
  }
  return out;
}
