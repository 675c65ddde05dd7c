"""Command-line frontend: files between stages, reproducible by construction.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numeric or
convergence error. Failures emit one machine-parsable line on stderr:
`lyre-error: {"kind": ..., "message": ...}`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bow as bow_mod
from . import corpus as corpus_mod
from . import embedding as emb_mod
from . import evaluation as eval_mod
from . import svm as svm_mod
from .errors import DataError, LyreError, NumericError, UsageError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise UsageError(message)


def _log_config(args: argparse.Namespace, output: Path | None) -> None:
    """Write the fully resolved configuration next to the command's outputs."""
    if output is None:
        return
    directory = output if output.is_dir() else output.parent
    directory.mkdir(parents=True, exist_ok=True)
    resolved = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command"):
            continue
        resolved[key] = str(value) if isinstance(value, Path) else value
    payload = {"command": args.command, **resolved}
    path = directory / f"{args.command}-config.json"
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def cmd_ingest(args) -> int:
    records = corpus_mod.ingest(args.input, fmt=args.format, strict=args.strict)
    records = corpus_mod.annotate_detected(records, redetect=args.redetect)
    kept, discarded = corpus_mod.filter_mislabeled(records)
    output = Path(args.output)
    corpus_mod.save_corpus(output, kept)
    if args.discarded_output:
        corpus_mod.save_corpus(args.discarded_output, discarded)
    _log_config(args, output)
    print(f"kept {len(kept)} discarded {len(discarded)}")
    return 0


def cmd_select_genres(args) -> int:
    records = corpus_mod.load_corpus(args.input)
    ranking_records = list(records)
    if args.rank_before_filter:
        if not args.discarded_input:
            raise UsageError("--rank-before-filter needs --discarded-input")
        ranking_records += corpus_mod.load_corpus(args.discarded_input)
    selection = corpus_mod.select_genres(ranking_records, args.top_k)
    table = (corpus_mod.genre_counts(ranking_records, selection)
             if selection.shared else None)
    output = Path(args.output)
    payload = {
        "k": selection.k,
        "per_language_top": {lang: list(top)
                             for lang, top in sorted(selection.per_language_top.items())},
        "shared": sorted(selection.shared),
    }
    output.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    _log_config(args, output)
    if table is not None:
        print(table.render_text())
    else:
        print("shared genre set is empty")
    return 0


def cmd_embed(args) -> int:
    records = corpus_mod.load_corpus(args.input)
    provider = emb_mod.resolve_provider(args.provider, dimension=args.dimension)
    embeddings, failures = emb_mod.embed_corpus(provider, records, args.token_budget)
    if not embeddings:
        raise DataError("no records could be embedded")
    output = Path(args.output)
    emb_mod.save_embedding_file(output, embeddings)
    if failures:
        sidecar = output.with_suffix(output.suffix + ".excluded.txt")
        sidecar.write_text(
            "".join(f"{record.id}\t{reason}\n" for record, reason in failures),
            encoding="utf-8",
        )
    _log_config(args, output)
    print(f"embedded {len(embeddings)} excluded {len(failures)}")
    return 0


def _tagged_language_of(corpus: dict[str, list]) -> tuple[list, dict]:
    combined = []
    tag_of = {}
    for tag, records in corpus.items():
        for record in records:
            combined.append(record)
            tag_of[id(record)] = tag
    return combined, tag_of


def cmd_bootstrap(args) -> int:
    config = eval_mod.load_protocol_config(args.config)
    if args.provider:
        config["provider"] = args.provider
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.centering:
        config["centering"] = args.centering
    if args.representation:
        config["representation"] = args.representation
    if args.allow_source_overlap:
        config["allow_source_overlap"] = True

    output = Path(args.output)
    output.mkdir(parents=True, exist_ok=True)
    config_dir = Path(args.config).parent

    corpus: dict[str, list] = {}
    for tag, rel_path in sorted(config["corpora"].items()):
        path = Path(rel_path)
        corpus[tag] = corpus_mod.load_corpus(path if path.is_absolute() else config_dir / path)

    vectors = None
    if config["representation"] == "embedding":
        provider = emb_mod.resolve_provider(config["provider"], dimension=config["dimension"])
        vectors = {}
        for tag in sorted(corpus):
            embeddings, failures = emb_mod.embed_corpus(
                provider, corpus[tag], config["token_budget"])
            if failures:
                excluded = {record.id for record, _ in failures}
                corpus[tag] = [r for r in corpus[tag] if r.id not in excluded]
                print(f"excluded {len(failures)} unembeddable records from {tag}",
                      file=sys.stderr)
            if not isinstance(provider, emb_mod.PrecomputedEmbeddings):
                safe = tag.replace("<-", "_from_")
                emb_mod.save_embedding_file(output / f"embeddings-{safe}.lyre", embeddings)
            vectors[tag] = {rid: e.values for rid, e in embeddings.items()}

    if config["genres"] == "auto":
        combined, tag_of = _tagged_language_of(corpus)
        selection = corpus_mod.select_genres(
            combined, config["auto_top_k"], language_of=lambda r: tag_of[id(r)])
        genres = sorted(selection.shared)
        if not genres:
            raise DataError("auto genre selection found no shared genres")
    else:
        genres = list(config["genres"])

    bow_kwargs = {"min_df": config["min_df"], "max_df": config["max_df"]}
    if config["excluded_terms_file"]:
        terms_path = Path(config["excluded_terms_file"])
        if not terms_path.is_absolute():
            terms_path = config_dir / terms_path
        bow_kwargs["excluded_terms"] = bow_mod.load_exclusion_file(terms_path)
    bow_config = bow_mod.BowConfig(**bow_kwargs)
    train_config = svm_mod.TrainConfig(
        c_grid=tuple(config["c_grid"]), folds=int(config["folds"]),
        max_epochs=int(config["max_epochs"]), tolerance=float(config["tolerance"]),
    )
    specs = eval_mod.resolve_specs(config, genres)
    results = eval_mod.run_protocol(
        specs, corpus, vectors=vectors, bow_config=bow_config,
        train_config=train_config, token_budget=config["token_budget"], jobs=args.jobs)

    eval_mod.write_results_csv(output / config["results_csv"], results)
    eval_mod.write_aggregate_csv(output / config["aggregate_csv"], results)
    args.resolved_protocol = config
    _log_config(args, output)
    for result in results:
        s = result.spec
        print(f"{s.genre} {s.train_language}->{s.test_language} "
              f"{s.representation} centralized={str(s.centralized).lower()} "
              f"f1={result.mean:.4f}±{2 * result.std:.4f}")
    return 0


def cmd_report(args) -> int:
    results = eval_mod.read_results_csv(args.input)
    if args.representation:
        results = [r for r in results if r.spec.representation == args.representation]
    if args.centralized is not None:
        wanted = args.centralized == "true"
        results = [r for r in results if r.spec.centralized is wanted]
    if not results:
        raise DataError("no results match the requested filters")
    matrix = eval_mod.aggregate_matrix(results)
    rendered = eval_mod.render_report(matrix, fmt=args.format)
    output = Path(args.output)
    output.write_text(rendered, encoding="utf-8")
    _log_config(args, output)
    print(rendered, end="")
    return 0


def cmd_predict(args) -> int:
    models = []
    for model_path in args.models:
        models.append(svm_mod.load_model(model_path))
    if not models:
        raise UsageError("no model files given")

    representations = {m.representation_tag for m in models}
    if len(representations) > 1:
        raise DataError(f"models mix representations: {sorted(representations)}")
    representation = representations.pop() or "embedding"

    if args.input and args.input != "-":
        lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    else:
        lines = sys.stdin.read().splitlines()
    texts = [line for line in lines if line.strip()]

    if representation == "bow":
        if not args.vocabulary:
            raise UsageError("bow models need --vocabulary")
        vocabulary, _ = bow_mod.load_vocabulary(args.vocabulary)
        X = bow_mod.transform_matrix(texts, vocabulary).toarray()
    else:
        provider = emb_mod.resolve_provider(args.provider, dimension=args.dimension)
        rows = []
        for text in texts:
            record = corpus_mod.LyricRecord(
                id="query", lyrics=text, declared_language="und", genres=("query",))
            rows.append(np.asarray(
                emb_mod.embed_song(provider, record, args.token_budget).values,
                dtype=np.float64))
        X = np.stack(rows) if rows else np.zeros((0, models[0].dimension))

    out_lines = []
    for i in range(X.shape[0]):
        scored = []
        for model in models:
            x = X[i]
            if model.centroid is not None:
                x = x - model.centroid.mean
            score = svm_mod.decision(model, x)
            if score > 0.0:
                scored.append((score, model.genre))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        out_lines.append(
            " ".join(f"{genre}:{score:+.4f}" for score, genre in scored) if scored else "-"
        )
    rendered = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.output:
        Path(args.output).write_text(rendered, encoding="utf-8")
        _log_config(args, Path(args.output))
    print(rendered, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lyre", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="read raw lyrics, detect languages, drop mismatches")
    ingest.add_argument("--input", required=True)
    ingest.add_argument("--output", required=True)
    ingest.add_argument("--format", choices=("csv", "jsonl"), default=None)
    ingest.add_argument("--strict", action="store_true",
                        help="fail on malformed rows instead of skipping them")
    ingest.add_argument("--redetect", action="store_true",
                        help="ignore any precomputed detected_language column")
    ingest.add_argument("--discarded-output", default=None)
    ingest.set_defaults(func=cmd_ingest)

    select = sub.add_parser("select-genres", help="rank genres per language and intersect")
    select.add_argument("--input", required=True)
    select.add_argument("--output", required=True)
    select.add_argument("--top-k", type=int, default=20)
    select.add_argument("--rank-before-filter", action="store_true",
                        help="rank on the pre-filter corpus (needs --discarded-input)")
    select.add_argument("--discarded-input", default=None)
    select.set_defaults(func=cmd_select_genres)

    embed = sub.add_parser("embed", help="embed a corpus into a LYRE file")
    embed.add_argument("--input", required=True)
    embed.add_argument("--output", required=True)
    embed.add_argument("--provider", default="mock:0")
    embed.add_argument("--dimension", type=int, default=emb_mod.DEFAULT_DIMENSION)
    embed.add_argument("--token-budget", type=int, default=emb_mod.DEFAULT_TOKEN_BUDGET)
    embed.set_defaults(func=cmd_embed)

    boot = sub.add_parser("bootstrap", help="run the bootstrap protocol from a config file")
    boot.add_argument("--config", required=True)
    boot.add_argument("--output", required=True, help="output directory")
    boot.add_argument("--provider", default=None)
    boot.add_argument("--seed", type=int, default=None)
    boot.add_argument("--jobs", type=int, default=1)
    boot.add_argument("--centering", choices=eval_mod.CENTERING_MODES, default=None)
    boot.add_argument("--representation", choices=eval_mod.REPRESENTATIONS, default=None)
    boot.add_argument("--allow-source-overlap", action="store_true")
    boot.set_defaults(func=cmd_bootstrap)

    report = sub.add_parser("report", help="aggregate a results CSV into a language matrix")
    report.add_argument("--input", required=True)
    report.add_argument("--output", required=True)
    report.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    report.add_argument("--representation", choices=eval_mod.REPRESENTATIONS, default=None)
    report.add_argument("--centralized", choices=("true", "false"), default=None)
    report.set_defaults(func=cmd_report)

    predict = sub.add_parser("predict", help="multi-label genre decisions for new lyrics")
    predict.add_argument("--models", nargs="+", required=True)
    predict.add_argument("--input", default="-", help="file of lyrics, one per line ('-' = stdin)")
    predict.add_argument("--output", default=None)
    predict.add_argument("--provider", default="mock:0")
    predict.add_argument("--vocabulary", default=None)
    predict.add_argument("--dimension", type=int, default=emb_mod.DEFAULT_DIMENSION)
    predict.add_argument("--token-budget", type=int, default=emb_mod.DEFAULT_TOKEN_BUDGET)
    predict.set_defaults(func=cmd_predict)

    return parser


def _emit_error(kind: str, exc: Exception) -> None:
    payload = json.dumps({"kind": kind, "message": str(exc)})
    print(f"lyre-error: {payload}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", exc)
        return 1
    except NumericError as exc:
        _emit_error("numeric", exc)
        return 3
    except (DataError, LyreError) as exc:
        _emit_error("data", exc)
        return 2
    except OSError as exc:
        _emit_error("data", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
