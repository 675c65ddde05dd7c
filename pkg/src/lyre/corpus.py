"""Lyric corpus ingestion, language filtering, and genre selection.

Input follows the documented CSV/JSONL schema: columns `id, artist, title,
lyrics, language, genres` (genres `;`-separated in CSV, a list in JSONL),
plus optional `source_id`, `detected_language`, and `corpus_variant` fields
carried through for translated corpora.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import RowError, SchemaError
from .langid import LanguageProfile, builtin_profiles, detect_language

logger = logging.getLogger(__name__)

GENRE_DELIMITER = ";"
NATIVE_VARIANT = "native"

_WS_RE = re.compile(r"\s+")


def normalize_genre(name: str) -> str:
    """Trim and collapse internal whitespace, keeping display casing."""
    return _WS_RE.sub(" ", name.strip())


def genre_key(name: str) -> str:
    """Case-insensitive matching key for a genre label."""
    return normalize_genre(name).casefold()


@dataclass(frozen=True)
class LyricRecord:
    """One song: text, language bookkeeping, and its multi-label genre set."""

    id: str
    lyrics: str
    declared_language: str
    genres: tuple[str, ...]
    artist: str = ""
    title: str = ""
    source_id: str | None = None
    detected_language: str | None = None
    corpus_variant: str = NATIVE_VARIANT

    def __post_init__(self):
        if not self.lyrics.strip():
            raise ValueError("lyrics must be non-empty")
        cleaned: list[str] = []
        seen: set[str] = set()
        for raw in self.genres:
            display = normalize_genre(raw)
            key = display.casefold()
            if display and key not in seen:
                seen.add(key)
                cleaned.append(display)
        if not cleaned:
            raise ValueError("record needs at least one genre")
        object.__setattr__(self, "genres", tuple(cleaned))
        if self.source_id is None:
            object.__setattr__(self, "source_id", self.id)

    @property
    def genre_keys(self) -> frozenset[str]:
        return frozenset(g.casefold() for g in self.genres)

    def with_detected(self, language: str) -> "LyricRecord":
        return replace(self, detected_language=language)


def variant_tag(record: LyricRecord) -> str:
    """Corpus-variant tag: `PT`, `EN`, or e.g. `PT<-EN` for translations."""
    lang = record.declared_language.upper()
    if record.corpus_variant == NATIVE_VARIANT:
        return lang
    source = record.corpus_variant.split(":", 1)[1].upper()
    return f"{lang}<-{source}"


def _parse_variant(raw: str | None) -> str:
    if not raw or raw == NATIVE_VARIANT:
        return NATIVE_VARIANT
    raw = raw.strip()
    if raw.startswith("translated-from:"):
        return raw
    raise ValueError(f"bad corpus_variant {raw!r}")


_REQUIRED = ("lyrics", "language", "genres")


def _record_from_fields(fields: Mapping[str, object], line: int, default_id: str) -> LyricRecord:
    for name in _REQUIRED:
        if fields.get(name) in (None, ""):
            raise RowError(line, f"empty or missing field {name!r}")
    genres = fields["genres"]
    if isinstance(genres, str):
        genres = [g for g in genres.split(GENRE_DELIMITER) if g.strip()]
    try:
        return LyricRecord(
            id=str(fields.get("id") or default_id),
            lyrics=str(fields["lyrics"]),
            declared_language=str(fields["language"]).strip().lower(),
            genres=tuple(str(g) for g in genres),
            artist=str(fields.get("artist") or ""),
            title=str(fields.get("title") or ""),
            source_id=str(fields["source_id"]) if fields.get("source_id") else None,
            detected_language=(
                str(fields["detected_language"]).strip().lower()
                if fields.get("detected_language")
                else None
            ),
            corpus_variant=_parse_variant(fields.get("corpus_variant")),  # type: ignore[arg-type]
        )
    except ValueError as exc:
        raise RowError(line, str(exc)) from exc


def ingest(path: str | Path, fmt: str | None = None, strict: bool = True) -> list[LyricRecord]:
    """Read lyric records from a CSV or JSONL file.

    With `strict=False`, malformed rows are skipped with a warning instead of
    raising. A missing required column raises `SchemaError` either way.
    """
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r}")

    records: list[LyricRecord] = []

    def consume(fields, line):
        try:
            records.append(_record_from_fields(fields, line, default_id=f"row{line}"))
        except RowError:
            if strict:
                raise
            logger.warning("skipping malformed row at line %d in %s", line, path)

    with path.open("r", encoding="utf-8", newline="") as handle:
        if fmt == "csv":
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            for name in _REQUIRED:
                if name not in header:
                    raise SchemaError(name)
            for i, row in enumerate(reader, start=2):
                consume(row, i)
        else:
            for i, raw in enumerate(handle, start=1):
                if not raw.strip():
                    continue
                try:
                    fields = json.loads(raw)
                except json.JSONDecodeError as exc:
                    if strict:
                        raise RowError(i, f"invalid JSON: {exc}") from exc
                    logger.warning("skipping invalid JSON at line %d in %s", i, path)
                    continue
                for name in _REQUIRED:
                    if name not in fields:
                        raise SchemaError(name, f"line {i}: missing field {name!r}")
                consume(fields, i)
    return records


def save_corpus(path: str | Path, records: Iterable[LyricRecord]) -> None:
    """Write records as JSONL with all derived fields, one object per line."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for r in records:
            obj = {
                "id": r.id,
                "source_id": r.source_id,
                "artist": r.artist,
                "title": r.title,
                "lyrics": r.lyrics,
                "language": r.declared_language,
                "detected_language": r.detected_language,
                "genres": list(r.genres),
                "corpus_variant": r.corpus_variant,
            }
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> list[LyricRecord]:
    return ingest(path, fmt="jsonl", strict=True)


def annotate_detected(
    records: Sequence[LyricRecord],
    profiles: Sequence[LanguageProfile] | None = None,
    redetect: bool = False,
) -> list[LyricRecord]:
    """Fill `detected_language`, trusting an existing value unless `redetect`."""
    profiles = profiles or builtin_profiles()
    out = []
    for r in records:
        if r.detected_language is not None and not redetect:
            out.append(r)
        else:
            language, _ = detect_language(r.lyrics, profiles)
            out.append(r.with_detected(language))
    return out


def filter_mislabeled(
    records: Sequence[LyricRecord],
) -> tuple[list[LyricRecord], list[LyricRecord]]:
    """Partition into (kept, discarded) by declared == detected language."""
    kept, discarded = [], []
    for r in records:
        if r.detected_language is None:
            raise ValueError(f"record {r.id!r} has no detected_language; run detection first")
        if r.declared_language.casefold() == r.detected_language.casefold():
            kept.append(r)
        else:
            discarded.append(r)
    return kept, discarded


def _declared_language(record: LyricRecord) -> str:
    return record.declared_language


@dataclass(frozen=True)
class GenreSelection:
    """Per-language top-k genres and their intersection."""

    k: int
    per_language_top: Mapping[str, tuple[str, ...]]
    shared: frozenset[str]

    @property
    def shared_keys(self) -> frozenset[str]:
        return frozenset(g.casefold() for g in self.shared)


def _display_table(records: Sequence[LyricRecord]) -> dict[str, str]:
    """Canonical display string per genre key: most frequent, ties lexicographic."""
    variants: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        for g in r.genres:
            variants[g.casefold()][g] += 1
    return {
        key: min((display for display, c in counter.items() if c == max(counter.values())))
        for key, counter in variants.items()
    }


def select_genres(
    records: Sequence[LyricRecord],
    k: int,
    language_of: Callable[[LyricRecord], str] = _declared_language,
) -> GenreSelection:
    """Top-k genres per language by song count, intersected across languages.

    Ranking is by count descending, ties broken lexicographically by the
    casefolded genre name; a song counts once toward each of its genres.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    display = _display_table(records)
    counts: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        lang = language_of(r)
        for key in r.genre_keys:
            counts[lang][key] += 1
    if len(counts) < 2:
        raise ValueError("records must span at least two languages")

    per_language_top: dict[str, tuple[str, ...]] = {}
    top_keys: list[set[str]] = []
    for lang in sorted(counts):
        ranked = sorted(counts[lang].items(), key=lambda kv: (-kv[1], kv[0]))
        keys = [key for key, _ in ranked[:k]]
        per_language_top[lang] = tuple(display[key] for key in keys)
        top_keys.append(set(keys))
    shared_keys = set.intersection(*top_keys)
    shared = frozenset(display[key] for key in shared_keys)
    return GenreSelection(k=k, per_language_top=per_language_top, shared=shared)


@dataclass(frozen=True)
class GenreCountTable:
    """Per-language and total song counts for each shared genre."""

    languages: tuple[str, ...]
    rows: tuple[tuple[str, Mapping[str, int], int], ...]  # (genre, per-language, total)

    def render_text(self) -> str:
        headers = ["Genre", *self.languages, "Total"]
        body = [
            [genre, *(f"{per_lang.get(l, 0):,}" for l in self.languages), f"{total:,}"]
            for genre, per_lang, total in self.rows
        ]
        col_totals = [
            sum(per_lang.get(l, 0) for _, per_lang, _ in self.rows) for l in self.languages
        ]
        body.append(["Total", *(f"{t:,}" for t in col_totals),
                     f"{sum(total for *_, total in self.rows):,}"])
        widths = [max(len(row[i]) for row in [headers, *body]) for i in range(len(headers))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        for row in body:
            lines.append("  ".join(c.rjust(w) if i else c.ljust(w)
                                   for i, (c, w) in enumerate(zip(row, widths))))
        return "\n".join(lines)


def genre_counts(
    records: Sequence[LyricRecord],
    selection: GenreSelection,
    language_of: Callable[[LyricRecord], str] = _declared_language,
) -> GenreCountTable:
    """Count songs per (shared genre, language); multi-label songs count in each row."""
    if not selection.shared:
        raise ValueError("selection has no shared genres")
    shared_keys = selection.shared_keys
    display = {g.casefold(): g for g in selection.shared}
    per: dict[str, Counter] = defaultdict(Counter)
    languages: set[str] = set()
    for r in records:
        lang = language_of(r)
        languages.add(lang)
        for key in r.genre_keys & shared_keys:
            per[key][lang] += 1
    ordered_langs = tuple(sorted(languages))
    rows = []
    for key in shared_keys:
        lang_counts = {l: per[key].get(l, 0) for l in ordered_langs}
        rows.append((display[key], lang_counts, sum(lang_counts.values())))
    rows.sort(key=lambda row: (-row[2], row[0].casefold()))
    return GenreCountTable(languages=ordered_langs, rows=tuple(rows))


def label_view(
    records: Sequence[LyricRecord], genre: str, selection: GenreSelection
) -> np.ndarray:
    """Binary one-vs-all labels (+1/-1) aligned with the record order."""
    key = genre_key(genre)
    if key not in selection.shared_keys:
        raise ValueError(f"genre {genre!r} is not in the shared selection")
    return np.array([1 if key in r.genre_keys else -1 for r in records], dtype=np.int64)
