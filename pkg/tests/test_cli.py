import contextlib
import io
import json
import os

import pytest

from avstoolkit.cli import main
from avstoolkit.engine import read_run_file
from avstoolkit.evaluation import load_qrels, load_strata
from avstoolkit.vectors import load_dense_store, load_sparse_store
from oracles import brute_force_search, plain_average_precision, straight_line_inf_ap

FIXTURE = os.path.join(os.path.dirname(__file__), "data", "fixture")


def fx(name):
    return os.path.join(FIXTURE, name)


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


class TestBasics:
    def test_version(self):
        code, out, _ = run_cli(["--version"])
        assert code == 0

    def test_help_exits_zero(self):
        for argv in (["--help"], ["search", "--help"], ["bank", "--help"]):
            code, _, _ = run_cli(argv)
            assert code == 0

    def test_unknown_flag_is_usage_error(self):
        code, _, err = run_cli(["search", "--frobnicate"])
        assert code == 1

    def test_missing_subcommand_is_usage_error(self):
        code, _, _ = run_cli([])
        assert code == 1

    def test_missing_file_is_data_error(self, tmp_path):
        code, _, err = run_cli(
            ["bank", "build", "--trees", str(tmp_path / "nope.jsonl"),
             "--out", str(tmp_path / "bank.tsv")]
        )
        assert code == 2
        assert "error" in err


class TestPipelineGolden:
    def test_bank_build_matches_golden_and_is_idempotent(self, tmp_path):
        out1 = str(tmp_path / "bank1.tsv")
        out2 = str(tmp_path / "bank2.tsv")
        for out in (out1, out2):
            code, _, _ = run_cli(
                ["bank", "build", "--trees", fx("corpus.trees.jsonl"),
                 "--min-freq", "3", "--out", out]
            )
            assert code == 0
        golden = open(fx("golden_bank.tsv"), "rb").read()
        assert open(out1, "rb").read() == golden
        assert open(out2, "rb").read() == golden

    def test_index_build_deterministic(self, tmp_path):
        paths = [str(tmp_path / f"index{i}.avsi") for i in (1, 2)]
        for path in paths:
            code, _, _ = run_cli(
                ["index", "build", "--embeddings", fx("videos.avsv"),
                 "--concepts", fx("videos.concepts.jsonl"),
                 "--bank", fx("golden_bank.tsv"), "--out", path]
            )
            assert code == 0
        assert open(paths[0], "rb").read() == open(paths[1], "rb").read()

    @pytest.fixture()
    def index_path(self, tmp_path):
        path = str(tmp_path / "corpus.avsi")
        code, _, _ = run_cli(
            ["index", "build", "--embeddings", fx("videos.avsv"),
             "--concepts", fx("videos.concepts.jsonl"),
             "--bank", fx("golden_bank.tsv"), "--out", path]
        )
        assert code == 0
        return path

    def test_search_matches_golden_run(self, index_path, tmp_path):
        out = str(tmp_path / "run.txt")
        code, _, _ = run_cli(
            ["search", "--index", index_path, "--queries", fx("queries.trees.jsonl"),
             "--mode", "fusion", "--alpha", "0.5", "--k", "10",
             "--query-embeddings", fx("queries.avsv"), "--tag", "fixture",
             "--out", out]
        )
        assert code == 0
        assert open(out).read() == open(fx("golden_run.txt")).read()

    def test_eval_matches_golden_report(self, tmp_path):
        code, out, _ = run_cli(
            ["eval", "--runs", fx("golden_run.txt"), "--qrels", fx("qrels.txt"),
             "--strata", fx("strata.txt"),
             "--strata-membership", fx("strata_membership.txt"),
             "--depth", "10", "--per-query"]
        )
        assert code == 0
        assert out == open(fx("golden_report.txt")).read()

    def test_golden_run_matches_brute_force_oracle(self):
        """The committed ranking is reproduced by independent per-item scoring."""
        from avstoolkit.concepts import load_bank
        from avstoolkit.engine import SearchMode, SearchRequest
        from avstoolkit.treebank import read_trees_jsonl
        from avstoolkit.vectors import Binary, text_to_concept_vector

        bank = load_bank(fx("golden_bank.tsv"))
        dense = load_dense_store(fx("videos.avsv"))
        sparse = load_sparse_store(fx("videos.concepts.jsonl"))
        emb_by_id = {dense.ids[i]: dense.record(i) for i in range(len(dense.ids))}
        cvec_by_id = {v.item_id: v for v in sparse.vectors}
        items = [
            (item, emb_by_id.get(item), cvec_by_id.get(item))
            for item in sorted(set(dense.ids) | set(cvec_by_id))
        ]
        qdense = load_dense_store(fx("queries.avsv"))
        qemb = {qdense.ids[i]: qdense.record(i) for i in range(len(qdense.ids))}

        golden = {run.query_id: run for run in read_run_file(fx("golden_run.txt"))}
        for src in read_trees_jsonl(fx("queries.trees.jsonl")):
            req = SearchRequest(
                query_id=src.sentence_id,
                mode=SearchMode.FUSION,
                embedding=qemb[src.sentence_id],
                concept_vector=text_to_concept_vector(
                    src.tree, bank, Binary(), item_id=src.sentence_id
                ),
                alpha=0.5,
                k=10,
            )
            expected = brute_force_search(items, req)
            assert golden[src.sentence_id].item_ids() == [x[0] for x in expected]

    def test_golden_report_matches_metric_oracles(self):
        """AP and infAP values in the report re-derive from first principles."""
        qrels = load_qrels(fx("qrels.txt"))
        spec = load_strata(fx("strata.txt"), fx("strata_membership.txt"))
        runs = {run.query_id: run for run in read_run_file(fx("golden_run.txt"))}

        report = {}
        for line in open(fx("golden_report.txt")):
            metric, qid, value = line.split("\t")
            report[(metric, qid)] = value.strip()

        for qid, run in runs.items():
            judged = qrels.judgments[qid]
            relevant = {item for item, j in judged.items() if j == 1}
            ap = plain_average_precision(run.item_ids(), relevant, 10)
            assert float(report[("ap", qid)]) == pytest.approx(ap, abs=1e-6)
            strata = {
                sid: (s.rate, s.membership)
                for sid, s in spec.strata[qid].items()
            }
            iap = straight_line_inf_ap(run, judged, strata, depth=10)
            assert float(report[("infap", qid)]) == pytest.approx(iap, abs=1e-6)


class TestSearchErrors:
    def test_embedding_mode_without_query_embeddings_fails_per_query(
        self, tmp_path
    ):
        index_path = str(tmp_path / "corpus.avsi")
        run_cli(
            ["index", "build", "--embeddings", fx("videos.avsv"),
             "--concepts", fx("videos.concepts.jsonl"),
             "--bank", fx("golden_bank.tsv"), "--out", index_path]
        )
        out = str(tmp_path / "run.txt")
        code, _, err = run_cli(
            ["search", "--index", index_path, "--queries", fx("queries.trees.jsonl"),
             "--mode", "embedding", "--out", out]
        )
        assert code == 2
        assert "needs a query embedding" in err
        assert open(out).read() == ""  # no partial garbage

    def test_concept_mode_needs_no_embeddings(self, tmp_path):
        index_path = str(tmp_path / "corpus.avsi")
        run_cli(
            ["index", "build", "--embeddings", fx("videos.avsv"),
             "--concepts", fx("videos.concepts.jsonl"),
             "--bank", fx("golden_bank.tsv"), "--out", index_path]
        )
        out = str(tmp_path / "run.txt")
        code, _, _ = run_cli(
            ["search", "--index", index_path, "--queries", fx("queries.trees.jsonl"),
             "--mode", "concept", "--k", "5", "--out", out]
        )
        assert code == 0
        runs = read_run_file(out)
        assert len(runs) == 3
        assert all(len(r.entries) == 5 for r in runs)


class TestBankStats:
    def test_stats_output(self):
        code, out, _ = run_cli(["bank", "stats", "--bank", fx("golden_bank.tsv")])
        assert code == 0
        lines = dict(
            (line.split("\t")[0], line.split("\t")[1:]) for line in out.splitlines()
        )
        assert lines["n"] == ["17"]
        assert lines["phrases"] == ["8"]
        assert lines["has_phrases"] == ["true"]


class TestDatasetCommands:
    def make_corpus(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        records = []
        for i in range(5):
            records.append(
                {
                    "video_id": f"v{i}",
                    "duration": 10.0 + i,
                    "captions": [
                        {
                            "caption_id": f"v{i}#0",
                            "text": "a cat sat on the mat",
                            "frame_time": 1.0,
                            "origin": "generated",
                        },
                        {
                            "caption_id": f"v{i}#1",
                            "text": "cat naps",
                            "frame_time": None,
                            "origin": "original",
                        },
                    ],
                }
            )
        path.write_text("".join(json.dumps(r) + "\n" for r in records))
        return str(path)

    def test_frames_output(self):
        code, out, _ = run_cli(["dataset", "frames", "--duration", "18.0"])
        assert code == 0
        values = [float(x) for x in out.split()]
        assert values == pytest.approx([1.8, 5.4, 9.0, 12.6, 16.2])

    def test_frames_rejects_nonpositive(self):
        code, _, err = run_cli(["dataset", "frames", "--duration", "0"])
        assert code == 2

    def test_stats(self, tmp_path):
        corpus = self.make_corpus(tmp_path)
        code, out, _ = run_cli(["dataset", "stats", "--corpus", corpus])
        assert code == 0
        values = dict(line.split("\t") for line in out.splitlines())
        assert values["videos"] == "5"
        assert values["captions"] == "10"
        assert float(values["avg_tokens"]) == pytest.approx(4.0)
        assert float(values["captions_per_video"]) == pytest.approx(2.0)

    def test_manifest(self, tmp_path):
        corpus = self.make_corpus(tmp_path)
        train = str(tmp_path / "train.txt")
        val = str(tmp_path / "val.txt")
        code, out, _ = run_cli(
            ["dataset", "manifest", "--corpus", corpus, "--ratio", "0.8",
             "--seed", "3", "--out-train", train, "--out-val", val]
        )
        assert code == 0
        train_ids = open(train).read().splitlines()
        val_ids = open(val).read().splitlines()
        assert len(train_ids) == 4 and len(val_ids) == 1
        assert set(train_ids) | set(val_ids) == {f"v{i}" for i in range(5)}
