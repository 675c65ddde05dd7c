"""Song embeddings: sentence segmentation, pluggable providers, mean pooling,
per-set centering, and the `LYRE` embedding-file format.

Lyrics are split into sentence chunks under a token budget, each chunk is
embedded by a provider, and the chunk vectors are mean-pooled into one song
vector. Providers that cannot guarantee components in [-1, 1] are wrapped
with per-sentence L2 normalization so the bound holds by construction.
"""

from __future__ import annotations

import hashlib
import re
import struct
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import LyricRecord
from .errors import (
    DimensionMismatchError,
    EmbeddingFileError,
    ProviderContractError,
    UnembeddableLyricsError,
)
from .validation import check_feature_matrix

DEFAULT_DIMENSION = 768
DEFAULT_TOKEN_BUDGET = 128

# Tokenizer-free budget approximation: whitespace words x 1.3. Floor keeps
# "two words fit in a budget of 2" true while leaving sub-word slack at the
# real 128-token budget (99 words ~ 128 approx tokens).
TOKEN_FACTOR = 1.3

_TERMINAL_SPLIT_RE = re.compile(r"(?<=[.!?;:])(?![.!?;:])\s*")
_WORD_CHAR_RE = re.compile(r"\w")
_WS_RE = re.compile(r"\s+")


def approx_token_count(text: str) -> int:
    return int(TOKEN_FACTOR * len(text.split()))


@dataclass(frozen=True)
class SentenceChunk:
    text: str
    approx_tokens: int


def _max_words(token_budget: int) -> int:
    words = max(1, int((token_budget + 1) / TOKEN_FACTOR))
    while int(TOKEN_FACTOR * (words + 1)) <= token_budget:
        words += 1
    while words > 1 and int(TOKEN_FACTOR * words) > token_budget:
        words -= 1
    return words


def segment(text: str, token_budget: int = DEFAULT_TOKEN_BUDGET) -> list[SentenceChunk]:
    """Split lyrics at line breaks and terminal punctuation, then enforce the budget.

    Oversized sentences are re-split at word boundaries into maximal
    sub-chunks whose approximate token count stays within the budget. Text
    with no word characters yields an empty list.
    """
    if token_budget < 1:
        raise ValueError("token_budget must be >= 1")
    sentences: list[str] = []
    for line in text.splitlines():
        for piece in _TERMINAL_SPLIT_RE.split(line):
            piece = _WS_RE.sub(" ", piece).strip()
            if not piece:
                continue
            if _WORD_CHAR_RE.search(piece):
                sentences.append(piece)
            elif sentences:
                # Pure punctuation (e.g. a stray "...") attaches to the
                # previous sentence rather than becoming its own chunk.
                sentences[-1] = f"{sentences[-1]}{piece}"
            else:
                sentences.append(piece)
    sentences = [s for s in sentences if _WORD_CHAR_RE.search(s)]

    budget_words = _max_words(token_budget)
    chunks: list[SentenceChunk] = []
    for sentence in sentences:
        words = sentence.split()
        for start in range(0, len(words), budget_words):
            part = " ".join(words[start : start + budget_words])
            chunks.append(SentenceChunk(part, approx_token_count(part)))
    return chunks


def pool(sentence_embeddings: Sequence[np.ndarray]) -> np.ndarray:
    """Component-wise arithmetic mean of same-dimension vectors."""
    if len(sentence_embeddings) == 0:
        raise ValueError("cannot pool an empty list of embeddings")
    first = np.asarray(sentence_embeddings[0], dtype=np.float64).ravel()
    stacked = np.empty((len(sentence_embeddings), first.shape[0]), dtype=np.float64)
    for i, vec in enumerate(sentence_embeddings):
        vec = np.asarray(vec, dtype=np.float64).ravel()
        if vec.shape[0] != first.shape[0]:
            raise DimensionMismatchError(
                f"embedding {i} has dimension {vec.shape[0]}, expected {first.shape[0]}"
            )
        stacked[i] = vec
    return stacked.mean(axis=0)


@dataclass(frozen=True)
class SongEmbedding:
    """Mean-pooled song vector; values are float32, the file-storage dtype."""

    record_id: str
    values: np.ndarray
    provider_tag: str

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class SentenceProvider:
    """Contract for sentence-level embedding backends.

    `embed` must be deterministic for a fixed configuration and return a
    vector of length `dimension`. Providers with `bounded=True` promise all
    components lie in [-1, 1].
    """

    dimension: int
    bounded: bool = False
    tag: str = "provider"

    def embed(self, sentence: str) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, sentences: Sequence[str]) -> list[np.ndarray]:
        return [self.embed(s) for s in sentences]


class HashEmbeddingProvider(SentenceProvider):
    """Deterministic pseudo-embeddings from a seeded hash of the sentence.

    Useful for tests and desk-scale protocol runs: equal sentences map to
    equal vectors, distinct sentences collide only with hash probability,
    and components are uniform in [-1, 1].
    """

    bounded = True

    def __init__(self, seed: int, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.seed = int(seed)
        self.dimension = int(dimension)
        self.tag = f"mock:{self.seed}"

    def embed(self, sentence: str) -> np.ndarray:
        digest = hashlib.blake2b(
            f"{self.seed}\x1f{sentence}".encode("utf-8"), digest_size=16
        ).digest()
        entropy = int.from_bytes(digest, "little")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
        return rng.uniform(-1.0, 1.0, self.dimension).astype(np.float32)


class NormalizedProvider(SentenceProvider):
    """Wraps an unbounded provider with per-sentence L2 normalization."""

    bounded = True

    def __init__(self, inner: SentenceProvider):
        self.inner = inner

    @property
    def dimension(self) -> int:  # inner providers may infer this lazily
        return self.inner.dimension

    @property
    def tag(self) -> str:
        return self.inner.tag

    @staticmethod
    def _normalize(vec) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec = vec / norm
        return vec.astype(np.float32)

    def embed(self, sentence: str) -> np.ndarray:
        return self._normalize(self.inner.embed(sentence))

    def embed_batch(self, sentences: Sequence[str]) -> list[np.ndarray]:
        return [self._normalize(vec) for vec in self.inner.embed_batch(sentences)]


class LineProtocolProvider(SentenceProvider):
    """Posts newline-delimited sentence batches to an external endpoint.

    The endpoint answers one space-separated float row per request line.
    Output is unbounded; `resolve_provider` wraps it in L2 normalization.
    """

    bounded = False

    def __init__(self, endpoint: str, dimension: int | None = None, timeout: float = 60.0):
        self.endpoint = endpoint
        self.dimension = dimension or 0
        self.timeout = timeout
        self.tag = f"extern:{endpoint}"

    def embed(self, sentence: str) -> np.ndarray:
        return self.embed_batch([sentence])[0]

    def embed_batch(self, sentences: Sequence[str]) -> list[np.ndarray]:
        if not sentences:
            return []
        body = "\n".join(s.replace("\n", " ") for s in sentences).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "text/plain; charset=utf-8"}
        )
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            payload = response.read().decode("utf-8")
        rows = [line for line in payload.splitlines() if line.strip()]
        if len(rows) != len(sentences):
            raise ProviderContractError(
                f"endpoint returned {len(rows)} rows for {len(sentences)} sentences"
            )
        vectors = []
        for row in rows:
            vec = np.array([float(tok) for tok in row.split()], dtype=np.float64)
            if self.dimension == 0:
                self.dimension = vec.shape[0]
            if vec.shape[0] != self.dimension:
                raise DimensionMismatchError(
                    f"endpoint row has {vec.shape[0]} values, expected {self.dimension}"
                )
            vectors.append(vec)
        return vectors


class PrecomputedEmbeddings:
    """Song-level vectors keyed by record id (from a `LYRE` file or in memory)."""

    def __init__(self, vectors: Mapping[str, np.ndarray], dimension: int | None = None,
                 tag: str = "precomputed", bounded: bool = False):
        self.vectors = {
            key: np.asarray(vec, dtype=np.float32).ravel() for key, vec in vectors.items()
        }
        if dimension is None:
            if not self.vectors:
                raise ValueError("empty precomputed table needs an explicit dimension")
            dimension = next(iter(self.vectors.values())).shape[0]
        self.dimension = int(dimension)
        self.bounded = bounded
        self.tag = tag
        for key, vec in self.vectors.items():
            if vec.shape[0] != self.dimension:
                raise DimensionMismatchError(
                    f"vector {key!r} has dimension {vec.shape[0]}, expected {self.dimension}"
                )

    def lookup(self, record_id: str) -> np.ndarray:
        try:
            return self.vectors[record_id]
        except KeyError:
            raise UnembeddableLyricsError(
                f"no precomputed embedding for record {record_id!r}"
            ) from None


Provider = SentenceProvider | PrecomputedEmbeddings


def resolve_provider(spec: str, dimension: int = DEFAULT_DIMENSION) -> Provider:
    """Build a provider from a selection string.

    `mock:<seed>` (optionally `mock:<seed>:<dim>`), `file:<path>` for
    precomputed song vectors, `extern:<endpoint>` for the line-protocol
    adapter (wrapped with L2 normalization).
    """
    kind, _, rest = spec.partition(":")
    if kind == "mock":
        parts = rest.split(":") if rest else [""]
        if not parts[0].lstrip("-").isdigit():
            raise ValueError(f"mock provider needs an integer seed, got {spec!r}")
        dim = int(parts[1]) if len(parts) > 1 else dimension
        return HashEmbeddingProvider(seed=int(parts[0]), dimension=dim)
    if kind == "file":
        if not rest:
            raise ValueError("file provider needs a path")
        table = PrecomputedEmbeddings(
            {k: e.values for k, e in load_embedding_file(rest).items()},
            tag=f"file:{rest}",
        )
        return table
    if kind == "extern":
        if not rest:
            raise ValueError("extern provider needs an endpoint")
        return NormalizedProvider(LineProtocolProvider(rest, dimension=None))
    raise ValueError(f"unknown provider spec {spec!r}")


def embed_song(
    provider: Provider,
    record: LyricRecord,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> SongEmbedding:
    """Segment, embed, and mean-pool one song (or fetch its precomputed vector)."""
    if isinstance(provider, PrecomputedEmbeddings):
        return SongEmbedding(record.id, provider.lookup(record.id), provider.tag)
    chunks = segment(record.lyrics, token_budget)
    if not chunks:
        raise UnembeddableLyricsError(f"record {record.id!r} has no embeddable sentences")
    vectors = provider.embed_batch([c.text for c in chunks])
    for vec in vectors:
        if np.asarray(vec).ravel().shape[0] != provider.dimension:
            raise DimensionMismatchError(
                f"provider {provider.tag} emitted a vector of wrong dimension"
            )
    values = pool(vectors).astype(np.float32)
    if provider.bounded and (np.abs(values) > 1.0).any():
        worst = float(np.abs(values).max())
        raise ProviderContractError(
            f"bounded provider {provider.tag} produced component magnitude {worst}"
        )
    return SongEmbedding(record.id, values, provider.tag)


def embed_corpus(
    provider: Provider,
    records: Sequence[LyricRecord],
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> tuple[dict[str, SongEmbedding], list[tuple[LyricRecord, str]]]:
    """Embed every record, collecting per-song failures instead of raising."""
    embeddings: dict[str, SongEmbedding] = {}
    failures: list[tuple[LyricRecord, str]] = []
    for record in records:
        try:
            embeddings[record.id] = embed_song(provider, record, token_budget)
        except UnembeddableLyricsError as exc:
            failures.append((record, str(exc)))
    return embeddings, failures


@dataclass(frozen=True)
class CentroidTransform:
    """Recorded mean vector subtracted from a set, with its provenance."""

    mean: np.ndarray
    source: str  # "train-set" or "test-corpus"


def centralize(
    embeddings: Sequence[SongEmbedding] | np.ndarray, source: str = "train-set"
) -> tuple[np.ndarray, CentroidTransform]:
    """Subtract the set mean from every vector; returns float64 rows."""
    if isinstance(embeddings, np.ndarray):
        X = np.asarray(embeddings, dtype=np.float64)
    else:
        if len(embeddings) == 0:
            raise ValueError("cannot centralize an empty set")
        X = np.stack([e.values for e in embeddings]).astype(np.float64)
    mean = X.mean(axis=0)
    return X - mean, CentroidTransform(mean=mean, source=source)


class MeanCenterer(BaseEstimator, TransformerMixin):
    """Removes the per-set mean vector; the fitted mean is reusable on new data."""

    def __init__(self, source: str = "train-set"):
        self.source = source

    def fit(self, X, y=None):
        X = check_feature_matrix(np.asarray(X, dtype=np.float64))
        self.mean_ = X.mean(axis=0)
        return self

    def transform(self, X):
        if not hasattr(self, "mean_"):
            raise NotFittedError("MeanCenterer is not fitted")
        X = check_feature_matrix(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.mean_.shape[0]:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, centerer was fitted with {self.mean_.shape[0]}"
            )
        return X - self.mean_

    def to_transform(self) -> CentroidTransform:
        if not hasattr(self, "mean_"):
            raise NotFittedError("MeanCenterer is not fitted")
        return CentroidTransform(mean=self.mean_.copy(), source=self.source)


# --- LYRE embedding-file format ---------------------------------------------
#
# Little-endian binary: magic "LYRE", u32 version=1, u32 dimension, u64 count,
# then per record: u32 id-length, id bytes (UTF-8), dimension x float32.

_MAGIC = b"LYRE"
_VERSION = 1


def save_embedding_file(
    path: str | Path, embeddings: Mapping[str, SongEmbedding] | Sequence[SongEmbedding]
) -> None:
    items = list(embeddings.values()) if isinstance(embeddings, Mapping) else list(embeddings)
    if not items:
        raise ValueError("refusing to write an empty embedding file")
    dimension = items[0].dimension
    with Path(path).open("wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<IIQ", _VERSION, dimension, len(items)))
        for emb in items:
            if emb.dimension != dimension:
                raise DimensionMismatchError(
                    f"embedding {emb.record_id!r} has dimension {emb.dimension}, "
                    f"file dimension is {dimension}"
                )
            encoded = emb.record_id.encode("utf-8")
            handle.write(struct.pack("<I", len(encoded)))
            handle.write(encoded)
            handle.write(np.asarray(emb.values, dtype="<f4").tobytes())


def load_embedding_file(path: str | Path) -> dict[str, SongEmbedding]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 20 or data[:4] != _MAGIC:
        raise EmbeddingFileError(f"{path}: bad magic bytes")
    version, dimension, count = struct.unpack_from("<IIQ", data, 4)
    if version != _VERSION:
        raise EmbeddingFileError(f"{path}: unsupported version {version}")
    offset = 20
    tag = f"file:{path}"
    out: dict[str, SongEmbedding] = {}
    for _ in range(count):
        if offset + 4 > len(data):
            raise EmbeddingFileError(f"{path}: truncated before an id length")
        (id_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        vec_bytes = dimension * 4
        if offset + id_len + vec_bytes > len(data):
            raise EmbeddingFileError(f"{path}: truncated record payload")
        record_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        values = np.frombuffer(data[offset : offset + vec_bytes], dtype="<f4").copy()
        offset += vec_bytes
        if record_id in out:
            raise EmbeddingFileError(f"{path}: duplicate record id {record_id!r}")
        out[record_id] = SongEmbedding(record_id, values, tag)
    if offset != len(data):
        raise EmbeddingFileError(f"{path}: {len(data) - offset} trailing bytes")
    if len(out) != count:
        raise EmbeddingFileError(f"{path}: id count mismatch")
    return out


class MeanPoolingEmbedder(BaseEstimator, TransformerMixin):
    """Transformer facade: lyrics in, pooled song vectors out (row per text)."""

    def __init__(self, provider: Provider | None = None,
                 token_budget: int = DEFAULT_TOKEN_BUDGET):
        self.provider = provider
        self.token_budget = token_budget

    def fit(self, X, y=None):
        return self

    def transform(self, X: Iterable[str]) -> np.ndarray:
        provider = self.provider
        if provider is None or isinstance(provider, PrecomputedEmbeddings):
            raise ValueError("MeanPoolingEmbedder needs a sentence-level provider")
        rows = []
        for text in X:
            chunks = segment(text, self.token_budget)
            if not chunks:
                raise UnembeddableLyricsError("text has no embeddable sentences")
            rows.append(pool(provider.embed_batch([c.text for c in chunks])))
        return np.stack(rows)
