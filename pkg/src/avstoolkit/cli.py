"""Single batch executable for the whole pipeline.

Subcommands: `bank build|stats`, `index build`, `search`, `eval`,
`dataset stats|frames|manifest`.  Exit codes: 0 success, 1 usage error,
2 data error.  Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .concepts import (
    NormalizationConfig,
    bank_stats,
    build_bank,
    count_concepts,
    load_bank,
    load_normalization_config,
    save_bank,
)
from .dataset import (
    CaptionRecord,
    corpus_stats,
    emit_manifest,
    frame_schedule,
    load_corpus,
)
from .engine import (
    SearchMode,
    SearchRequest,
    batch_search,
    build_index,
    load_index,
    read_run_file,
    save_index,
    write_run_file,
)
from .evaluation import evaluate, load_qrels, load_strata, render_report
from .treebank import read_trees_jsonl
from .vectors import (
    Binary,
    load_dense_store,
    load_sparse_store,
    text_to_concept_vector,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="avstk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"avstk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bank = sub.add_parser("bank", help="concept bank construction and summary")
    bank_sub = bank.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    bank_build = bank_sub.add_parser("build", help="count concepts and build a bank")
    bank_build.add_argument("--trees", required=True, help=".trees.jsonl corpus")
    bank_build.add_argument("--min-freq", type=int, default=20,
                            help="inclusive frequency threshold (default 20)")
    bank_build.add_argument("--config", help="normalization config file")
    bank_build.add_argument("--out", required=True, help="output bank TSV")
    bank_build.set_defaults(func=cmd_bank_build)
    bank_stats_p = bank_sub.add_parser("stats", help="print bank summary")
    bank_stats_p.add_argument("--bank", required=True, help="bank TSV")
    bank_stats_p.set_defaults(func=cmd_bank_stats)

    index = sub.add_parser("index", help="corpus index construction")
    index_sub = index.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    index_build = index_sub.add_parser("build", help="join stores into an index")
    index_build.add_argument("--embeddings", help="dense AVSV store")
    index_build.add_argument("--concepts", help="sparse JSONL store")
    index_build.add_argument("--bank", required=True, help="bank TSV")
    index_build.add_argument("--out", required=True, help="output AVSI index")
    index_build.set_defaults(func=cmd_index_build)

    search = sub.add_parser("search", help="run queries against an index")
    search.add_argument("--index", required=True, help="AVSI index file")
    search.add_argument("--queries", required=True, help="query .trees.jsonl")
    search.add_argument("--mode", required=True,
                        choices=[m.value for m in SearchMode])
    search.add_argument("--alpha", type=float, default=0.5,
                        help="fusion weight on the embedding side (default 0.5)")
    search.add_argument("--k", type=int, default=1000, help="search length (default 1000)")
    search.add_argument("--tag", default="avstk", help="run tag for the output file")
    search.add_argument("--out", required=True, help="output TREC run file")
    search.add_argument("--query-embeddings", help="dense AVSV store of query vectors")
    search.add_argument("--query-concepts",
                        help="sparse JSONL store overriding tree-derived query vectors")
    search.add_argument("--config", help="normalization config file")
    search.add_argument("--threads", type=int, default=1)
    search.set_defaults(func=cmd_search)

    eval_p = sub.add_parser("eval", help="score run files against judgments")
    eval_p.add_argument("--runs", required=True, help="TREC run file")
    eval_p.add_argument("--qrels", required=True, help="qrels file")
    eval_p.add_argument("--strata", help="stratum-size sidecar file")
    eval_p.add_argument("--strata-membership", help="optional pool membership file")
    eval_p.add_argument("--depth", type=int, default=1000)
    eval_p.add_argument("--metrics", default="xinfap,map,recall,medr",
                        help="comma list of xinfap,map,recall,medr")
    eval_p.add_argument("--per-query", action="store_true",
                        help="include per-query lines in the report")
    eval_p.add_argument("--threads", type=int, default=1)
    eval_p.set_defaults(func=cmd_eval)

    dataset = sub.add_parser("dataset", help="caption-corpus tooling")
    ds_sub = dataset.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    ds_stats = ds_sub.add_parser("stats", help="corpus statistics")
    ds_stats.add_argument("--corpus", required=True, help="corpus JSONL")
    ds_stats.set_defaults(func=cmd_dataset_stats)
    ds_frames = ds_sub.add_parser("frames", help="frame timestamps for one duration")
    ds_frames.add_argument("--duration", type=float, required=True)
    ds_frames.add_argument("--spacing", type=float, default=3.6)
    ds_frames.add_argument("--frames", type=int, default=5)
    ds_frames.set_defaults(func=cmd_dataset_frames)
    ds_manifest = ds_sub.add_parser("manifest", help="train/val split manifests")
    ds_manifest.add_argument("--corpus", required=True, help="corpus JSONL")
    ds_manifest.add_argument("--ratio", type=float, default=0.8)
    ds_manifest.add_argument("--seed", type=int, default=0)
    ds_manifest.add_argument("--out-train", required=True)
    ds_manifest.add_argument("--out-val", required=True)
    ds_manifest.set_defaults(func=cmd_dataset_manifest)

    return parser


def _load_config(path: Optional[str]) -> NormalizationConfig:
    return load_normalization_config(path) if path else NormalizationConfig()


def cmd_bank_build(args) -> int:
    cfg = _load_config(args.config)
    trees = (src.tree for src in read_trees_jsonl(args.trees))
    counts = count_concepts(trees, cfg)
    bank = build_bank(counts, min_freq=args.min_freq)
    save_bank(bank, args.out)
    print(f"bank: {bank.n} concepts (min_freq={bank.min_freq}) -> {args.out}",
          file=sys.stderr)
    return 0


def cmd_bank_stats(args) -> int:
    bank = load_bank(args.bank)
    stats = bank_stats(bank)
    print(f"n\t{stats.n}")
    print(f"phrases\t{stats.phrase_count}")
    labels = (f"band[{bank.min_freq},50]", "band(50,100]", "band(100,inf)")
    for label, count, frac in zip(labels, stats.band_counts, stats.band_fractions):
        print(f"{label}\t{count}\t{frac:.6f}")
    print(f"has_phrases\t{str(stats.has_phrases).lower()}")
    return 0


def cmd_index_build(args) -> int:
    if not args.embeddings and not args.concepts:
        print("error: index build needs --embeddings and/or --concepts",
              file=sys.stderr)
        return 1
    bank = load_bank(args.bank)
    dense = load_dense_store(args.embeddings) if args.embeddings else None
    sparse = load_sparse_store(args.concepts) if args.concepts else None
    index = build_index(dense, sparse, bank)
    save_index(index, args.out)
    print(f"index: {index.size} items, d={index.dim}, "
          f"{len(index.postings)} posting lists -> {args.out}", file=sys.stderr)
    return 0


def cmd_search(args) -> int:
    index = load_index(args.index)
    cfg = _load_config(args.config)
    mode = SearchMode(args.mode)

    query_embeddings = {}
    if args.query_embeddings:
        store = load_dense_store(args.query_embeddings)
        query_embeddings = {store.ids[i]: store.record(i) for i in range(len(store.ids))}
    query_concepts = {}
    if args.query_concepts:
        store = load_sparse_store(args.query_concepts)
        query_concepts = {vec.item_id: vec for vec in store.vectors}

    requests = []
    for src in read_trees_jsonl(args.queries):
        concept_vec = query_concepts.get(src.sentence_id)
        if concept_vec is None and mode in (SearchMode.CONCEPT, SearchMode.FUSION):
            concept_vec = text_to_concept_vector(
                src.tree, index.bank, Binary(), cfg, item_id=src.sentence_id
            )
        requests.append(
            SearchRequest(
                query_id=src.sentence_id,
                mode=mode,
                embedding=query_embeddings.get(src.sentence_id),
                concept_vector=concept_vec,
                alpha=args.alpha,
                k=args.k,
            )
        )

    results = batch_search(index, requests, threads=args.threads)
    failures = 0
    runs = []
    for req, result in zip(requests, results):
        if isinstance(result, Exception):
            failures += 1
            print(f"error: query {req.query_id!r}: {result}", file=sys.stderr)
        else:
            runs.append(result)
    write_run_file(runs, args.out, tag=args.tag)
    print(f"search: {len(runs)} runs -> {args.out}"
          + (f" ({failures} failed)" if failures else ""), file=sys.stderr)
    return 2 if failures else 0


def cmd_eval(args) -> int:
    runs = read_run_file(args.runs)
    qrels = load_qrels(args.qrels)
    strata = None
    if args.strata:
        strata = load_strata(args.strata, args.strata_membership)
    elif args.strata_membership:
        print("error: --strata-membership requires --strata", file=sys.stderr)
        return 1
    report = evaluate(
        runs, qrels, strata=strata, depth=args.depth, threads=args.threads
    )
    metrics = [m for m in args.metrics.split(",") if m]
    sys.stdout.write(render_report(report, metrics, per_query=args.per_query))
    return 0


def cmd_dataset_stats(args) -> int:
    captions: list[CaptionRecord] = []
    for _video, caps in load_corpus(args.corpus):
        captions.extend(caps)
    stats = corpus_stats(captions)
    print(f"videos\t{stats.num_videos}")
    print(f"captions\t{stats.num_captions}")
    print(f"avg_tokens\t{stats.avg_tokens_per_caption:.6f}")
    print(f"captions_per_video\t{stats.captions_per_video:.6f}")
    print(f"empty\t{str(stats.empty).lower()}")
    return 0


def cmd_dataset_frames(args) -> int:
    for t in frame_schedule(args.duration, args.spacing, args.frames):
        print(f"{t:.6f}")
    return 0


def cmd_dataset_manifest(args) -> int:
    videos = []
    captions: list[CaptionRecord] = []
    for video, caps in load_corpus(args.corpus):
        videos.append(video)
        captions.extend(caps)
    train, val = emit_manifest(
        videos, captions, args.ratio, args.seed, args.out_train, args.out_val
    )
    print(f"train\t{len(train)}")
    print(f"val\t{len(val)}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
