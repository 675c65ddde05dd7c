"""Bootstrap evaluation protocol: split, balance, pair languages, train, score.

One protocol run for a (genre, train language, test language) triple is:
80/20 split per language, balanced resampling with replacement of each side,
representation building (embeddings or a TF-IDF vocabulary fitted on the
train sample only), optional per-set mean centering, C selection by
stratified 5-fold cross-validation, final training, and f1 on the test
sample. Repeats aggregate to mean and sample standard deviation, reported
as mu +/- 2 sigma.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bow import BowConfig, build_exclusions, fit_vocabulary, transform_matrix
from .corpus import LyricRecord, genre_key
from .embedding import (
    DEFAULT_DIMENSION,
    DEFAULT_TOKEN_BUDGET,
    Provider,
    embed_song,
)
from .errors import DataError, DegenerateLabelsError
from .metrics import f1
from .seeding import derive_seed, make_rng
from .svm import TrainConfig, cv_select_c, predict, train_binary

VARIANT_ORDER = ("PT", "PT<-EN", "EN", "EN<-PT")

REPRESENTATIONS = ("embedding", "bow")
CENTERING_SOURCES = ("full-corpus", "sampled-set")


def order_tags(tags: Sequence[str]) -> tuple[str, ...]:
    """Canonical variants first, in table order; unknown tags follow sorted."""
    known = [t for t in VARIANT_ORDER if t in tags]
    extra = sorted(t for t in tags if t not in VARIANT_ORDER)
    return tuple(known + extra)


@dataclass(frozen=True)
class RunSpec:
    """One cell of the protocol: genre x train language x test language."""

    genre: str
    train_language: str
    test_language: str
    representation: str = "embedding"
    centralized: bool = False
    repeats: int = 10
    master_seed: int = 0
    test_centering_source: str = "full-corpus"
    allow_source_overlap: bool = False

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.test_centering_source not in CENTERING_SOURCES:
            raise ValueError(f"unknown centering source {self.test_centering_source!r}")


@dataclass(frozen=True)
class BootstrapResult:
    spec: RunSpec
    f1_values: tuple[float, ...]
    mean: float
    std: float


def split_80_20(records: Sequence, seed: int) -> tuple[list, list]:
    """Seeded uniform shuffle; first 80% (floor) trains, the rest tests."""
    n = len(records)
    if n < 5:
        raise DataError(f"need at least 5 records to split, got {n}")
    rng = make_rng(seed, "split-80-20")
    order = rng.permutation(n)
    cut = int(0.8 * n)
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    return train, test


def balanced_resample(items: Sequence, labels, rng) -> tuple[list, np.ndarray]:
    """Draw min(#pos, #neg) items with replacement from each class.

    Output has exactly n positives and n negatives in shuffled order.
    """
    if isinstance(rng, (int, np.integer)):
        rng = make_rng(rng, "balanced-resample")
    labels = np.asarray(labels).ravel()
    pos_idx = np.flatnonzero(labels > 0)
    neg_idx = np.flatnonzero(labels < 0)
    if pos_idx.size == 0 or neg_idx.size == 0:
        raise DegenerateLabelsError(
            f"cannot balance a set with {pos_idx.size} positives and {neg_idx.size} negatives"
        )
    n = min(pos_idx.size, neg_idx.size)
    draw_pos = pos_idx[rng.integers(0, pos_idx.size, size=n)]
    draw_neg = neg_idx[rng.integers(0, neg_idx.size, size=n)]
    chosen = np.concatenate([draw_pos, draw_neg])
    chosen = chosen[rng.permutation(chosen.size)]
    return [items[i] for i in chosen], labels[chosen].copy()


def _genre_labels(records: Sequence[LyricRecord], genre: str) -> np.ndarray:
    key = genre_key(genre)
    return np.array([1 if key in r.genre_keys else -1 for r in records], dtype=np.int64)


def _vector_for(record: LyricRecord, tag: str, vectors, provider,
                token_budget: int) -> np.ndarray:
    if vectors is not None:
        table = vectors[tag]
        try:
            return np.asarray(table[record.id], dtype=np.float64)
        except KeyError:
            raise DataError(f"no embedding for record {record.id!r} in corpus {tag!r}") from None
    if provider is None:
        raise ValueError("embedding runs need either precomputed vectors or a provider")
    return np.asarray(embed_song(provider, record, token_budget).values, dtype=np.float64)


def _matrix(records, tag, vectors, provider, token_budget) -> np.ndarray:
    cache: dict[str, np.ndarray] = {}
    rows = []
    for r in records:
        if r.id not in cache:
            cache[r.id] = _vector_for(r, tag, vectors, provider, token_budget)
        rows.append(cache[r.id])
    return np.stack(rows)


def run_once(
    spec: RunSpec,
    repeat_index: int,
    corpus: Mapping[str, Sequence[LyricRecord]],
    vectors: Mapping[str, Mapping[str, np.ndarray]] | None = None,
    provider: Provider | None = None,
    bow_config: BowConfig | None = None,
    train_config: TrainConfig | None = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> float:
    """Execute one bootstrap repeat and return the test f1.

    The repeat's randomness derives from hash(master_seed, repeat, genre,
    train language, test language), so any repeat can run on any worker
    without changing results. Split seeds depend on the language only, so a
    monolingual run draws its train and test portions from one shared split.
    """
    try:
        return _run_once(spec, repeat_index, corpus, vectors, provider,
                         bow_config, train_config, token_budget)
    except Exception as exc:
        context = (f"genre={spec.genre!r} train={spec.train_language} "
                   f"test={spec.test_language} rep={spec.representation} "
                   f"centralized={spec.centralized} repeat={repeat_index}")
        exc.args = (f"[{context}] {exc}",)
        raise


def _run_once(spec, repeat_index, corpus, vectors, provider, bow_config,
              train_config, token_budget) -> float:
    for tag in (spec.train_language, spec.test_language):
        if tag not in corpus:
            raise DataError(f"corpus has no records for language variant {tag!r}")
    run_seed = derive_seed(spec.master_seed, repeat_index, spec.genre,
                           spec.train_language, spec.test_language)

    def split_seed(tag: str) -> int:
        return derive_seed(spec.master_seed, repeat_index, spec.genre, "split", tag)

    train_pool = split_80_20(corpus[spec.train_language], split_seed(spec.train_language))[0]
    test_pool = split_80_20(corpus[spec.test_language], split_seed(spec.test_language))[1]

    train_sample, y_train = balanced_resample(
        train_pool, _genre_labels(train_pool, spec.genre),
        make_rng(run_seed, "resample-train"),
    )

    if not spec.allow_source_overlap:
        train_sources = {r.source_id for r in train_sample}
        test_pool = [r for r in test_pool if r.source_id not in train_sources]

    test_sample, y_test = balanced_resample(
        test_pool, _genre_labels(test_pool, spec.genre),
        make_rng(run_seed, "resample-test"),
    )

    if spec.representation == "embedding":
        X_train = _matrix(train_sample, spec.train_language, vectors, provider, token_budget)
        X_test = _matrix(test_sample, spec.test_language, vectors, provider, token_budget)
        if spec.centralized:
            X_train = X_train - X_train.mean(axis=0)
            if spec.test_centering_source == "full-corpus":
                full = _matrix(corpus[spec.test_language], spec.test_language,
                               vectors, provider, token_budget)
                X_test = X_test - full.mean(axis=0)
            else:
                X_test = X_test - X_test.mean(axis=0)
    else:
        config = bow_config or BowConfig()
        config = replace(
            config,
            excluded_name_parts=config.excluded_name_parts | build_exclusions(train_sample),
        )
        docs_train = [r.lyrics for r in train_sample]
        docs_test = [r.lyrics for r in test_sample]
        vocabulary = fit_vocabulary(docs_train, config)
        X_train = transform_matrix(docs_train, vocabulary)
        X_test = transform_matrix(docs_test, vocabulary)
        if spec.centralized:
            X_train = np.asarray(X_train.todense())
            X_test = np.asarray(X_test.todense())
            X_train = X_train - X_train.mean(axis=0)
            X_test = X_test - X_test.mean(axis=0)

    config = train_config or TrainConfig()
    config = replace(config, seed=derive_seed(run_seed, "model"))
    report = cv_select_c(X_train, y_train, config)
    model = train_binary(X_train, y_train, report.chosen_c, config,
                         genre=spec.genre, representation_tag=spec.representation)
    return f1(y_test, predict(model, X_test))


def bootstrap(
    spec: RunSpec,
    corpus: Mapping[str, Sequence[LyricRecord]],
    **run_kwargs,
) -> BootstrapResult:
    """Run every repeat of a spec and aggregate mean and sample std."""
    values = tuple(
        run_once(spec, repeat, corpus, **run_kwargs) for repeat in range(spec.repeats)
    )
    return summarize(spec, values)


def summarize(spec: RunSpec, values: Sequence[float]) -> BootstrapResult:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return BootstrapResult(spec=spec, f1_values=tuple(float(v) for v in values),
                           mean=float(arr.mean()), std=std)


# --- aggregation and reporting ------------------------------------------------


@dataclass(frozen=True)
class CellStat:
    mean: float
    sigma: float
    genre_means: Mapping[str, float]


@dataclass(frozen=True)
class ResultMatrix:
    """Train-language rows by test-language columns of mu +/- 2 sigma cells."""

    train_tags: tuple[str, ...]
    test_tags: tuple[str, ...]
    cells: Mapping[tuple[str, str], CellStat]
    representation: str
    centralized: bool


def aggregate_matrix(results: Sequence[BootstrapResult]) -> ResultMatrix:
    """Collapse genre-level results: cell mean is the unweighted mean of the
    genre means, cell sigma their population std across genres."""
    if not results:
        raise ValueError("no results to aggregate")
    reps = {(r.spec.representation, r.spec.centralized) for r in results}
    if len(reps) > 1:
        raise ValueError(f"mixed representation/centering in aggregation: {sorted(reps)}")
    representation, centralized = reps.pop()

    by_cell: dict[tuple[str, str], dict[str, float]] = {}
    genres: set[str] = set()
    for r in results:
        cell = (r.spec.train_language, r.spec.test_language)
        by_cell.setdefault(cell, {})[r.spec.genre] = r.mean
        genres.add(r.spec.genre)

    cells: dict[tuple[str, str], CellStat] = {}
    for cell, genre_means in sorted(by_cell.items()):
        missing = genres - set(genre_means)
        if missing:
            raise DataError(
                f"cell {cell[0]}->{cell[1]} is missing genres: {sorted(missing)}"
            )
        means = np.array([genre_means[g] for g in sorted(genre_means)])
        cells[cell] = CellStat(mean=float(means.mean()),
                               sigma=float(means.std(ddof=0)),
                               genre_means=dict(sorted(genre_means.items())))
    train_tags = order_tags(sorted({c[0] for c in cells}))
    test_tags = order_tags(sorted({c[1] for c in cells}))
    return ResultMatrix(train_tags=train_tags, test_tags=test_tags, cells=cells,
                        representation=representation, centralized=centralized)


def render_report(matrix: ResultMatrix, fmt: str = "markdown") -> str:
    """Rows are train languages, columns test languages, cells "m.mm ± s.ss"
    with the two-sigma half-width. The CSV variant emits mean and two_sigma
    as separate columns."""
    if fmt == "markdown":
        header = ["Train \\ Test", *matrix.test_tags]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join(["---"] * len(header)) + "|"]
        for train in matrix.train_tags:
            row = [train]
            for test in matrix.test_tags:
                stat = matrix.cells.get((train, test))
                row.append("" if stat is None
                           else f"{stat.mean:.2f} ± {2 * stat.sigma:.2f}")
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["train_language", "test_language", "mean", "two_sigma"])
        for train in matrix.train_tags:
            for test in matrix.test_tags:
                stat = matrix.cells.get((train, test))
                if stat is not None:
                    writer.writerow([train, test, f"{stat.mean:.2f}",
                                     f"{2 * stat.sigma:.2f}"])
        return buffer.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


# --- protocol configuration and batch execution --------------------------------

_CONFIG_DEFAULTS = {
    "provider": "mock:0",
    "representation": "embedding",
    "genres": "auto",
    "auto_top_k": 20,
    "train_languages": None,
    "test_languages": None,
    "repeats": 10,
    "master_seed": 0,
    "centering": "none",
    "allow_source_overlap": False,
    "dimension": DEFAULT_DIMENSION,
    "token_budget": DEFAULT_TOKEN_BUDGET,
    "c_grid": [0.01, 0.1, 1.0, 10.0],
    "folds": 5,
    "max_epochs": 1000,
    "tolerance": 1e-3,
    "min_df": 0.01,
    "max_df": 0.3,
    "excluded_terms_file": None,
    "results_csv": "results.csv",
    "aggregate_csv": "aggregate.csv",
}

CENTERING_MODES = ("none", "full-corpus", "sampled-set")


def load_protocol_config(path: str | Path) -> dict:
    """Read the JSON run configuration and fill in defaults."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if "corpora" not in raw or not isinstance(raw["corpora"], dict) or not raw["corpora"]:
        raise DataError(f"{path}: config needs a non-empty 'corpora' mapping")
    unknown = set(raw) - set(_CONFIG_DEFAULTS) - {"corpora"}
    if unknown:
        raise DataError(f"{path}: unknown config keys: {sorted(unknown)}")
    config = {**_CONFIG_DEFAULTS, **raw}
    if config["centering"] not in CENTERING_MODES:
        raise DataError(f"{path}: centering must be one of {CENTERING_MODES}")
    if config["representation"] not in REPRESENTATIONS:
        raise DataError(f"{path}: representation must be one of {REPRESENTATIONS}")
    return config


def resolve_specs(config: Mapping, genres: Sequence[str]) -> list[RunSpec]:
    tags = order_tags(tuple(config["corpora"]))
    train_tags = tuple(config["train_languages"] or tags)
    test_tags = tuple(config["test_languages"] or tags)
    centralized = config["centering"] != "none"
    centering_source = config["centering"] if centralized else "full-corpus"
    return [
        RunSpec(
            genre=genre, train_language=train, test_language=test,
            representation=config["representation"], centralized=centralized,
            repeats=int(config["repeats"]), master_seed=int(config["master_seed"]),
            test_centering_source=centering_source,
            allow_source_overlap=bool(config["allow_source_overlap"]),
        )
        for genre in genres
        for train in train_tags
        for test in test_tags
    ]


_WORKER_STATE: dict = {}


def _init_worker(corpus, vectors, bow_config, train_config, token_budget):
    _WORKER_STATE.update(corpus=corpus, vectors=vectors, bow_config=bow_config,
                         train_config=train_config, token_budget=token_budget)


def _run_task(args: tuple[RunSpec, int]) -> tuple[RunSpec, int, float]:
    spec, repeat = args
    value = run_once(
        spec, repeat, _WORKER_STATE["corpus"], vectors=_WORKER_STATE["vectors"],
        bow_config=_WORKER_STATE["bow_config"],
        train_config=_WORKER_STATE["train_config"],
        token_budget=_WORKER_STATE["token_budget"],
    )
    return spec, repeat, value


def run_protocol(
    specs: Sequence[RunSpec],
    corpus: Mapping[str, Sequence[LyricRecord]],
    vectors=None,
    bow_config: BowConfig | None = None,
    train_config: TrainConfig | None = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    jobs: int = 1,
) -> list[BootstrapResult]:
    """Run all (spec, repeat) tasks, optionally across processes.

    Results are keyed and reassembled, so the report is identical for any
    `jobs` value.
    """
    tasks = [(spec, repeat) for spec in specs for repeat in range(spec.repeats)]
    values: dict[tuple[int, int], float] = {}
    spec_index = {id(spec): i for i, spec in enumerate(specs)}
    if jobs <= 1:
        _init_worker(corpus, vectors, bow_config, train_config, token_budget)
        for spec, repeat in tasks:
            _, _, value = _run_task((spec, repeat))
            values[(spec_index[id(spec)], repeat)] = value
    else:
        lookup = {spec: i for i, spec in enumerate(specs)}
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker,
            initargs=(corpus, vectors, bow_config, train_config, token_budget),
        ) as pool:
            for spec, repeat, value in pool.map(_run_task, tasks, chunksize=1):
                values[(lookup[spec], repeat)] = value
    return [
        summarize(spec, [values[(i, repeat)] for repeat in range(spec.repeats)])
        for i, spec in enumerate(specs)
    ]


RESULTS_COLUMNS = ("genre", "train_language", "test_language", "representation",
                   "centralized", "repeat", "f1")


def write_results_csv(path: str | Path, results: Sequence[BootstrapResult]) -> None:
    """One row per repeat; float formatting is shortest round-trip, so the
    file is byte-stable for a fixed master seed."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for result in results:
            s = result.spec
            for repeat, value in enumerate(result.f1_values):
                writer.writerow([s.genre, s.train_language, s.test_language,
                                 s.representation, str(s.centralized).lower(),
                                 repeat, repr(value)])


def write_aggregate_csv(path: str | Path, results: Sequence[BootstrapResult]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["genre", "train_language", "test_language", "representation",
                         "centralized", "mean", "std", "two_sigma"])
        for result in results:
            s = result.spec
            writer.writerow([s.genre, s.train_language, s.test_language,
                             s.representation, str(s.centralized).lower(),
                             repr(result.mean), repr(result.std),
                             repr(2 * result.std)])


def read_results_csv(path: str | Path) -> list[BootstrapResult]:
    """Rebuild per-spec results from the per-repeat rows."""
    grouped: dict[tuple, list[tuple[int, float]]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(RESULTS_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: results file is missing columns {sorted(missing)}")
        for row in reader:
            key = (row["genre"], row["train_language"], row["test_language"],
                   row["representation"], row["centralized"] == "true")
            grouped.setdefault(key, []).append((int(row["repeat"]), float(row["f1"])))
    results = []
    for (genre, train, test, representation, centralized), pairs in grouped.items():
        pairs.sort()
        spec = RunSpec(genre=genre, train_language=train, test_language=test,
                       representation=representation, centralized=centralized,
                       repeats=len(pairs))
        results.append(summarize(spec, [v for _, v in pairs]))
    return results
