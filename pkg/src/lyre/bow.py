"""TF-IDF bag-of-words baseline with document-frequency filters and exclusions.

Terms kept in the vocabulary satisfy min_df <= df/n_docs <= max_df (both ends
inclusive) and appear in neither exclusion list. Weights are raw term count
times smoothed idf, with final L2 document normalization.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from importlib import resources
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import LyricRecord
from .errors import EmptyVocabularyError

_LETTER_RUN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Casefold, split on non-letters (diacritics kept), drop 1-char tokens."""
    return [t for t in _LETTER_RUN_RE.findall(text.casefold()) if len(t) >= 2]


def default_musical_terms() -> frozenset[str]:
    raw = resources.files("lyre.data").joinpath("musical_terms.txt").read_text("utf-8")
    return frozenset(
        line.strip().casefold()
        for line in raw.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


def load_exclusion_file(path: str | Path) -> frozenset[str]:
    """One term per line; `#` starts a comment line."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line.casefold())
    return frozenset(terms)


@dataclass(frozen=True)
class BowConfig:
    min_df: float = 0.01
    max_df: float = 0.3
    excluded_terms: frozenset[str] = field(default_factory=default_musical_terms)
    excluded_name_parts: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not 0.0 <= self.min_df < self.max_df <= 1.0:
            raise ValueError(
                f"need 0 <= min_df < max_df <= 1, got ({self.min_df}, {self.max_df})"
            )


@dataclass(frozen=True)
class TfidfVocabulary:
    """Fitted term -> column map with document frequencies and idf weights."""

    terms: Mapping[str, int]  # term -> column index, alphabetical
    df: Mapping[str, int]
    n_docs: int
    idf: Mapping[str, float]

    def __len__(self) -> int:
        return len(self.terms)


def _idf(n_docs: int, df: int) -> float:
    return math.log((1 + n_docs) / (1 + df)) + 1.0


def fit_vocabulary(docs: Sequence[str], config: BowConfig | None = None) -> TfidfVocabulary:
    """Count document frequencies and keep terms inside the df band.

    Exclusion lists are applied after thresholding; idf uses
    ln((1 + n_docs) / (1 + df)) + 1.
    """
    config = config or BowConfig()
    if not docs:
        raise ValueError("cannot fit a vocabulary on an empty document list")
    n_docs = len(docs)
    df_counts: Counter[str] = Counter()
    for doc in docs:
        df_counts.update(set(tokenize(doc)))

    excluded = config.excluded_terms | config.excluded_name_parts
    kept: dict[str, int] = {}
    for term, count in df_counts.items():
        ratio = count / n_docs
        if config.min_df <= ratio <= config.max_df and term not in excluded:
            kept[term] = count
    if not kept:
        raise EmptyVocabularyError(
            f"no terms survive df in [{config.min_df}, {config.max_df}] "
            f"and {len(excluded)} exclusions over {n_docs} docs"
        )
    terms = {term: i for i, term in enumerate(sorted(kept))}
    idf = {term: _idf(n_docs, kept[term]) for term in terms}
    return TfidfVocabulary(terms=terms, df=dict(kept), n_docs=n_docs, idf=idf)


@dataclass(frozen=True)
class SparseDocVector:
    """L2-normalized tf-idf entries for one document, indices ascending."""

    entries: tuple[tuple[int, float], ...]
    norm: float  # L2 length before normalization


def transform(doc: str, vocabulary: TfidfVocabulary) -> SparseDocVector:
    """Raw count x idf per in-vocabulary term, then L2 normalization."""
    counts = Counter(tokenize(doc))
    raw: list[tuple[int, float]] = []
    for term, count in counts.items():
        index = vocabulary.terms.get(term)
        if index is not None:
            raw.append((index, count * vocabulary.idf[term]))
    raw.sort()
    norm = math.sqrt(sum(w * w for _, w in raw))
    if norm > 0.0:
        entries = tuple((i, w / norm) for i, w in raw)
    else:
        entries = tuple(raw)
    return SparseDocVector(entries=entries, norm=norm)


def transform_matrix(docs: Sequence[str], vocabulary: TfidfVocabulary) -> sp.csr_matrix:
    """Stack per-document sparse vectors into a CSR matrix."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        vec = transform(doc, vocabulary)
        indices.extend(i for i, _ in vec.entries)
        data.extend(w for _, w in vec.entries)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.intp),
         np.array(indptr, dtype=np.intp)),
        shape=(len(docs), len(vocabulary)),
    )


def build_exclusions(records: Sequence[LyricRecord], common_rank: int = 1000) -> frozenset[str]:
    """Artist-name tokens, minus tokens among the `common_rank` most frequent
    lyric tokens (so everyday words appearing in band names survive)."""
    name_parts: set[str] = set()
    for record in records:
        name_parts.update(tokenize(record.artist))
    if not name_parts:
        return frozenset()
    lyric_counts: Counter[str] = Counter()
    for record in records:
        lyric_counts.update(tokenize(record.lyrics))
    ranked = sorted(lyric_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    common = {term for term, _ in ranked[:common_rank]}
    return frozenset(name_parts - common)


class TfidfVectorizer(BaseEstimator, TransformerMixin):
    """Estimator facade over fit_vocabulary/transform_matrix."""

    def __init__(self, min_df: float = 0.01, max_df: float = 0.3,
                 excluded_terms: frozenset[str] | None = None,
                 excluded_name_parts: frozenset[str] | None = None):
        self.min_df = min_df
        self.max_df = max_df
        self.excluded_terms = excluded_terms
        self.excluded_name_parts = excluded_name_parts

    def _config(self) -> BowConfig:
        kwargs = {"min_df": self.min_df, "max_df": self.max_df}
        if self.excluded_terms is not None:
            kwargs["excluded_terms"] = frozenset(self.excluded_terms)
        if self.excluded_name_parts is not None:
            kwargs["excluded_name_parts"] = frozenset(self.excluded_name_parts)
        return BowConfig(**kwargs)

    def fit(self, docs: Sequence[str], y=None):
        self.vocabulary_ = fit_vocabulary(docs, self._config())
        return self

    def transform(self, docs: Sequence[str]) -> sp.csr_matrix:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("TfidfVectorizer is not fitted")
        return transform_matrix(docs, self.vocabulary_)


# --- vocabulary persistence ---------------------------------------------------

_VOCAB_HEADER = "lyre-vocabulary v1"


def save_vocabulary(path: str | Path, vocabulary: TfidfVocabulary,
                    config: BowConfig | None = None) -> None:
    """Line-oriented text format: header, counts, thresholds, per-term rows."""
    config = config or BowConfig()
    lines = [
        _VOCAB_HEADER,
        f"n_docs\t{vocabulary.n_docs}",
        f"min_df\t{config.min_df!r}",
        f"max_df\t{config.max_df!r}",
        f"terms\t{len(vocabulary)}",
    ]
    for term, index in vocabulary.terms.items():
        lines.append(f"{term}\t{vocabulary.df[term]}\t{vocabulary.idf[term]!r}\t{index}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> tuple[TfidfVocabulary, BowConfig]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _VOCAB_HEADER:
        raise ValueError(f"{path}: not a lyre vocabulary file")
    meta = {}
    for line in lines[1:5]:
        key, value = line.split("\t", 1)
        meta[key] = value
    terms: dict[str, int] = {}
    df: dict[str, int] = {}
    idf: dict[str, float] = {}
    for line in lines[5:]:
        if not line.strip():
            continue
        term, df_raw, idf_raw, index_raw = line.split("\t")
        terms[term] = int(index_raw)
        df[term] = int(df_raw)
        idf[term] = float(idf_raw)
    if len(terms) != int(meta["terms"]):
        raise ValueError(f"{path}: term count mismatch")
    vocabulary = TfidfVocabulary(terms=terms, df=df, n_docs=int(meta["n_docs"]), idf=idf)
    config = BowConfig(min_df=float(meta["min_df"]), max_df=float(meta["max_df"]))
    return vocabulary, config
