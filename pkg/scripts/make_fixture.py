#!/usr/bin/env python3
"""Regenerate the committed CLI pipeline fixture under tests/data/fixture.

Builds a tiny three-topic corpus (10 videos, 2 captions each), derives
every input file the CLI pipeline needs, runs the pipeline end to end
through the CLI entry point, and freezes its outputs (bank TSV, run
file, eval report) as golden files.  Everything is seeded; rerunning
must reproduce the committed bytes.

Usage: python scripts/make_fixture.py [output_dir]
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import sys

import numpy as np

from avstoolkit.cli import main as cli_main
from avstoolkit.concepts import load_bank
from avstoolkit.treebank import parse_bracketed
from avstoolkit.vectors import (
    DenseStore,
    SparseStore,
    captions_to_video_concept_vector,
    save_dense_store,
    save_sparse_store,
)

TOPIC_CAPTIONS = [
    [
        "(S (NP (DT a) (JJ young) (NN man)) (VP (VBZ sits) (PP (IN on) (NP (DT the) (NN floor)))))",
        "(S (NP (DT the) (NN man)) (VP (VBZ sits) (PRT (RP down))))",
    ],
    [
        "(S (NP (DT a) (NN dog)) (VP (VBZ runs) (PP (IN in) (NP (DT the) (NN park)))))",
        "(S (NP (DT the) (JJ brown) (NN dog)) (VP (VBG running)))",
    ],
    [
        "(S (NP (DT a) (NN woman)) (VP (VBZ holds) (NP (DT a) (NN baby))))",
        "(S (NP (DT the) (NN woman)) (VP (VBG holding) (NP (PRP$ her) (NN baby))))",
    ],
]

TOPIC_OF_VIDEO = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]

QUERIES = {
    "q1": "(S (NP (DT a) (JJ young) (NN man)) (VP (VBZ sits)))",
    "q2": "(S (NP (DT a) (NN dog)) (VP (VBG running)))",
    "q3": "(S (NP (DT a) (NN woman)) (VP (VBG holding) (NP (DT a) (NN baby))))",
}
QUERY_TOPIC = {"q1": 0, "q2": 1, "q3": 2}

DIM = 8


def run_cli(argv):
    code = cli_main(argv)
    if code != 0:
        raise SystemExit(f"cli {argv} failed with exit code {code}")


def capture_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        run_cli(argv)
    return buf.getvalue()


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    videos = [f"v{i:02d}" for i in range(10)]

    corpus_path = os.path.join(out_dir, "corpus.trees.jsonl")
    with open(corpus_path, "w", encoding="utf-8", newline="\n") as fh:
        for video, topic in zip(videos, TOPIC_OF_VIDEO):
            for j, tree in enumerate(TOPIC_CAPTIONS[topic]):
                fh.write(json.dumps({"id": f"{video}#{j}", "tree": tree}) + "\n")

    queries_path = os.path.join(out_dir, "queries.trees.jsonl")
    with open(queries_path, "w", encoding="utf-8", newline="\n") as fh:
        for qid, tree in QUERIES.items():
            fh.write(json.dumps({"id": qid, "tree": tree}) + "\n")

    bank_path = os.path.join(out_dir, "golden_bank.tsv")
    run_cli(["bank", "build", "--trees", corpus_path, "--min-freq", "3",
             "--out", bank_path])
    bank = load_bank(bank_path)

    sparse_path = os.path.join(out_dir, "videos.concepts.jsonl")
    vectors = []
    for video, topic in zip(videos, TOPIC_OF_VIDEO):
        trees = [parse_bracketed(t) for t in TOPIC_CAPTIONS[topic]]
        vectors.append(captions_to_video_concept_vector(trees, bank, item_id=video))
    save_sparse_store(SparseStore(vectors=vectors), sparse_path)

    rng = np.random.default_rng(20240501)
    topic_axes = rng.standard_normal((3, DIM)).astype(np.float32)
    video_rows = np.vstack(
        [
            topic_axes[topic] + 0.15 * rng.standard_normal(DIM).astype(np.float32)
            for topic in TOPIC_OF_VIDEO
        ]
    ).astype(np.float32)
    dense_path = os.path.join(out_dir, "videos.avsv")
    save_dense_store(DenseStore(ids=videos, matrix=video_rows), dense_path)

    query_rows = np.vstack(
        [
            topic_axes[QUERY_TOPIC[qid]]
            + 0.15 * rng.standard_normal(DIM).astype(np.float32)
            for qid in QUERIES
        ]
    ).astype(np.float32)
    qdense_path = os.path.join(out_dir, "queries.avsv")
    save_dense_store(DenseStore(ids=list(QUERIES), matrix=query_rows), qdense_path)

    # q1 judged in two strata (rates 1.0 and 0.5, v09 left unpooled);
    # q2/q3 fully judged in a single stratum.  Relevance deliberately
    # disagrees with parts of the ranking so the golden metrics are
    # non-trivial values rather than a wall of 1.0s.
    qrels_path = os.path.join(out_dir, "qrels.txt")
    strata_path = os.path.join(out_dir, "strata.txt")
    membership_path = os.path.join(out_dir, "strata_membership.txt")
    relevant = {
        "q1": {"v00", "v01", "v06"},
        "q2": {"v02", "v04", "v05"},
        "q3": {"v08", "v09"},
    }
    with open(qrels_path, "w", newline="\n") as fh:
        for video in videos[:5]:
            fh.write(f"q1 s0 {video} {1 if video in relevant['q1'] else 0}\n")
        for video in ("v05", "v06"):
            fh.write(f"q1 s1 {video} {1 if video in relevant['q1'] else 0}\n")
        for qid in ("q2", "q3"):
            for video in videos:
                fh.write(f"{qid} s0 {video} {1 if video in relevant[qid] else 0}\n")
    with open(strata_path, "w", newline="\n") as fh:
        fh.write("q1 s0 5 5\n")
        fh.write("q1 s1 4 2\n")
        fh.write("q2 s0 10 10\n")
        fh.write("q3 s0 10 10\n")
    with open(membership_path, "w", newline="\n") as fh:
        for video in videos[:5]:
            fh.write(f"q1 s0 {video}\n")
        for video in ("v05", "v06", "v07", "v08"):
            fh.write(f"q1 s1 {video}\n")
        for qid in ("q2", "q3"):
            for video in videos:
                fh.write(f"{qid} s0 {video}\n")

    index_path = os.path.join(out_dir, "index.avsi")
    run_cli(["index", "build", "--embeddings", dense_path, "--concepts", sparse_path,
             "--bank", bank_path, "--out", index_path])

    run_path = os.path.join(out_dir, "golden_run.txt")
    run_cli(["search", "--index", index_path, "--queries", queries_path,
             "--mode", "fusion", "--alpha", "0.5", "--k", "10",
             "--query-embeddings", qdense_path, "--tag", "fixture",
             "--out", run_path])

    report = capture_cli(["eval", "--runs", run_path, "--qrels", qrels_path,
                          "--strata", strata_path,
                          "--strata-membership", membership_path,
                          "--depth", "10", "--per-query"])
    with open(os.path.join(out_dir, "golden_report.txt"), "w", newline="\n") as fh:
        fh.write(report)

    os.remove(index_path)  # rebuilt by the tests; binaries stay out of git
    print(f"fixture written to {out_dir}", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/fixture")
