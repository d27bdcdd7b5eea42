"""Acceptance suite: one test per criterion, each printing a PASS line.

Everything here is property-based or anchored to hand-authored fixtures;
nothing depends on external corpora or trained models.  The large-scale
check builds a million-vector index in memory and needs roughly 4 GB of
RAM and half a minute.
"""

import random
import time
import warnings

import numpy as np
import pytest

from avstoolkit.concepts import (
    ConceptCounts,
    ConceptKind,
    NormalizationConfig,
    bank_to_tsv,
    build_bank,
    count_concepts,
    extract_concepts,
)
from avstoolkit.dataset import frame_schedule
from avstoolkit.engine import (
    RunEntry,
    RunList,
    SearchMode,
    SearchRequest,
    batch_search,
    build_index,
    search,
    write_run_file,
)
from avstoolkit.evaluation import (
    Qrels,
    StrataSpec,
    Stratum,
    average_precision,
    inf_ap,
)
from avstoolkit.treebank import parse_bracketed
from avstoolkit.vectors import (
    Binary,
    ConceptVector,
    DenseStore,
    EmbeddingRecord,
    SparseStore,
    captions_to_video_concept_vector,
    text_to_concept_vector,
)
from oracles import brute_force_search, straight_line_inf_ap

CFG = NormalizationConfig()


def report(name):
    print(f"\nACCEPTANCE {name}: PASS")


def run_from_order(qid, order):
    return RunList(
        query_id=qid,
        entries=tuple(
            RunEntry(item_id=item, score=float(len(order) - i), rank=i + 1)
            for i, item in enumerate(order)
        ),
    )


def test_estimator_identity_full_judgments():
    """|infAP - AP| <= 1e-4 on 1,000 fully judged single-stratum instances,
    in under 5 seconds."""
    rng = np.random.default_rng(20240601)
    instances = []
    for _ in range(1000):
        n = int(rng.integers(20, 120))
        items = [f"d{i:03d}" for i in range(n)]
        p_rel = float(rng.uniform(0.05, 0.5))
        judgments = {item: int(rng.random() < p_rel) for item in items}
        order = [items[i] for i in rng.permutation(n)]
        instances.append((items, judgments, order))

    start = time.perf_counter()
    worst = 0.0
    for items, judgments, order in instances:
        qrels = Qrels()
        for item, judgment in judgments.items():
            qrels.add("q", "s0", item, judgment)
        strata = StrataSpec(
            strata={
                "q": {
                    "s0": Stratum(
                        pool_size=len(items),
                        sampled_size=len(items),
                        membership=frozenset(items),
                    )
                }
            }
        )
        run = run_from_order("q", order)
        ap = average_precision(run, qrels, depth=len(order))
        iap = inf_ap(run, qrels, strata, depth=len(order))
        worst = max(worst, abs(iap - ap))
        assert abs(iap - ap) <= 1e-4
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"estimator identity took {elapsed:.2f}s"
    report(f"estimator identity (1000 instances, worst |diff|={worst:.2e}, "
           f"{elapsed:.2f}s)")


def test_stratified_estimator_matches_straight_line_oracle():
    """inf_ap agrees with an independent transcription of the formula to 1e-9
    on 100+ randomized two-strata instances."""
    rng = np.random.default_rng(20240602)
    checked = 0
    for _ in range(120):
        n = int(rng.integers(40, 150))
        items = [f"d{i:03d}" for i in range(n)]
        perm = [items[i] for i in rng.permutation(n)]
        size_a = int(rng.integers(10, n // 2))
        size_b = int(rng.integers(10, n - size_a - 5))
        pool_a = perm[:size_a]
        pool_b = perm[size_a : size_a + size_b]
        sampled_a = int(rng.integers(1, size_a + 1))
        sampled_b = int(rng.integers(1, size_b + 1))
        judged_a = [pool_a[i] for i in rng.permutation(size_a)[:sampled_a]]
        judged_b = [pool_b[i] for i in rng.permutation(size_b)[:sampled_b]]

        qrels = Qrels()
        p_rel = float(rng.uniform(0.2, 0.7))
        for item in judged_a:
            qrels.add("q", "sa", item, int(rng.random() < p_rel))
        for item in judged_b:
            qrels.add("q", "sb", item, int(rng.random() < p_rel))
        strata = StrataSpec(
            strata={
                "q": {
                    "sa": Stratum(size_a, sampled_a, frozenset(pool_a)),
                    "sb": Stratum(size_b, sampled_b, frozenset(pool_b)),
                }
            }
        )
        order = [items[i] for i in rng.permutation(n)]
        run = run_from_order("q", order)
        depth = int(rng.integers(10, n + 1))

        got = inf_ap(run, qrels, strata, depth=depth)
        expected = straight_line_inf_ap(
            run,
            qrels.judgments["q"],
            {
                "sa": (sampled_a / size_a, frozenset(pool_a)),
                "sb": (sampled_b / size_b, frozenset(pool_b)),
            },
            depth=depth,
        )
        assert got == pytest.approx(expected, abs=1e-9)
        checked += 1
    assert checked >= 100
    report(f"stratified estimator vs straight-line oracle ({checked} instances)")


def test_extraction_fixtures_from_hand_authored_trees():
    """The documented example phrases come out of extraction verbatim."""
    def phrases(text):
        return {c.surface for c in extract_concepts(parse_bracketed(text), CFG)
                if c.is_phrase}

    assert phrases("(VP (VBG holding) (NP (PRP$ his) (NN hand)))") == {"hold hand"}
    assert phrases("(PP (TO to) (NP (PRP$ his) (NN face)))") == {"to face"}
    wall = phrases(
        "(PP (IN in) (NP (NP (NN front)) (PP (IN of) "
        "(NP (DT a) (NN brick) (NN wall)))))"
    )
    assert "in front brick wall" in wall
    report("extraction fixtures (hold hand / to face / in front brick wall)")


def test_bank_thresholding_and_sharded_determinism():
    """Planted frequencies 19/20/21 split exactly at min_freq=20; the bank is
    byte-identical across repeat builds, input order, and shard counts."""
    trees = (
        [parse_bracketed("(NN alpha)")] * 19
        + [parse_bracketed("(NN beta)")] * 20
        + [parse_bracketed("(NN gamma)")] * 21
    )
    random.Random(11).shuffle(trees)

    bank = build_bank(count_concepts(trees, CFG), min_freq=20)
    surfaces = {e.concept.surface: e.frequency for e in bank.entries}
    assert surfaces == {"beta": 20, "gamma": 21}

    reference = bank_to_tsv(bank)
    # repeat build
    assert bank_to_tsv(build_bank(count_concepts(trees, CFG), 20)) == reference
    # different corpus order
    reordered = list(reversed(trees))
    assert bank_to_tsv(build_bank(count_concepts(reordered, CFG), 20)) == reference
    # 1-shard vs 8-shard counting with merge
    sharded = [count_concepts(trees[i::8], CFG) for i in range(8)]
    merged = ConceptCounts()
    for part in sharded:
        merged.merge(part)
    assert bank_to_tsv(build_bank(merged, 20)) == reference
    report("bank thresholding {19,20,21} and 1-vs-8-shard byte determinism")


def _random_corpus(rng, n_items, dim, bank_n):
    items = []
    dense_ids, dense_rows, sparse_vecs = [], [], []
    for i in range(n_items):
        item_id = f"v{i:05d}"
        emb = None
        cvec = None
        has_dense = rng.random() < 0.9
        has_sparse = rng.random() < 0.9 or not has_dense
        if has_dense:
            emb = EmbeddingRecord(item_id, rng.standard_normal(dim).astype(np.float32))
            dense_ids.append(item_id)
            dense_rows.append(emb.values)
        if has_sparse:
            support = rng.choice(bank_n, size=int(rng.integers(1, 7)), replace=False)
            cvec = ConceptVector(
                item_id, {int(c): float(rng.random() + 0.05) for c in support}
            )
            sparse_vecs.append(cvec)
        items.append((item_id, emb, cvec))
    dense = DenseStore(ids=dense_ids, matrix=np.vstack(dense_rows))
    sparse = SparseStore(vectors=sparse_vecs)
    return items, dense, sparse


def _word_bank(n):
    counts = ConceptCounts()
    for i in range(n):
        surface = f"w{i:03d}"
        counts.frequencies[surface] = 20
        counts.kinds[surface] = {ConceptKind.NOUN}
    return build_bank(counts, min_freq=20)


def test_retrieval_exactness_against_brute_force():
    """All three modes reproduce the brute-force oracle on a 1,000-item
    corpus for 50 random queries; fusion endpoints equal the single modes."""
    rng = np.random.default_rng(20240603)
    dim = 16
    bank = _word_bank(60)
    items, dense, sparse = _random_corpus(rng, 1000, dim, bank.n)
    index = build_index(dense, sparse, bank)

    mismatches = 0
    for qi in range(50):
        qid = f"q{qi:02d}"
        emb = EmbeddingRecord(qid, rng.standard_normal(dim).astype(np.float32))
        support = rng.choice(bank.n, size=int(rng.integers(1, 7)), replace=False)
        cvec = ConceptVector(qid, {int(c): float(rng.random() + 0.05) for c in support})
        alpha = float(rng.uniform(0.1, 0.9))
        k = int(rng.choice([10, 100, 1000]))
        for mode in SearchMode:
            req = SearchRequest(
                query_id=qid, mode=mode, embedding=emb, concept_vector=cvec,
                alpha=alpha, k=k,
            )
            got = [e.item_id for e in search(index, req).entries]
            expected = [item for item, _ in brute_force_search(items, req)]
            if got != expected:
                mismatches += 1

        base = dict(query_id=qid, embedding=emb, concept_vector=cvec, k=200)
        emb_run = search(index, SearchRequest(mode=SearchMode.EMBEDDING, **base))
        con_run = search(index, SearchRequest(mode=SearchMode.CONCEPT, **base))
        fuse1 = search(index, SearchRequest(mode=SearchMode.FUSION, alpha=1.0, **base))
        fuse0 = search(index, SearchRequest(mode=SearchMode.FUSION, alpha=0.0, **base))
        assert fuse1.entries == emb_run.entries
        assert fuse0.entries == con_run.entries
    assert mismatches == 0
    report("retrieval exactness (50 queries x 3 modes, fusion endpoints)")


@pytest.mark.slow
def test_scale_million_item_embedding_search():
    """Exact top-1000 over 1M 512-d vectors: <=10 s single-threaded, <=3 s
    with 8 threads, and byte-identical batch output across thread counts."""
    n, dim = 1_000_000, 512
    rng = np.random.default_rng(20240604)
    matrix = np.empty((n, dim), dtype=np.float32)
    chunk = 131072
    for i in range(0, n, chunk):
        rows = min(chunk, n - i)
        matrix[i : i + rows] = rng.standard_normal((rows, dim), dtype=np.float32)
    ids = [f"v{i:07d}" for i in range(n)]
    index = build_index(
        DenseStore(ids=ids, matrix=matrix), None, _word_bank(0)
    )
    del matrix

    def request(qid, seed):
        q = np.random.default_rng(seed).standard_normal(dim).astype(np.float32)
        return SearchRequest(
            query_id=qid, mode=SearchMode.EMBEDDING,
            embedding=EmbeddingRecord(qid, q), k=1000,
        )

    req = request("q_timed", 1)
    start = time.perf_counter()
    (single,) = batch_search(index, [req], threads=1)
    t_single = time.perf_counter() - start
    assert isinstance(single, RunList) and len(single.entries) == 1000
    assert t_single <= 10.0, f"single-threaded search took {t_single:.2f}s"

    start = time.perf_counter()
    (threaded,) = batch_search(index, [req], threads=8)
    t_threaded = time.perf_counter() - start
    assert t_threaded <= 3.0, f"8-thread search took {t_threaded:.2f}s"
    assert threaded == single

    batch = [request(f"q{i}", 100 + i) for i in range(6)]
    outputs = {}
    for threads in (1, 8):
        results = batch_search(index, batch, threads=threads)
        import io

        buf = io.StringIO()
        write_run_file([r for r in results if isinstance(r, RunList)], buf)
        outputs[threads] = buf.getvalue()
    assert outputs[1] == outputs[8]
    report(
        f"scale 1M x 512 (single {t_single:.2f}s, 8-thread {t_threaded:.2f}s, "
        f"batch byte-identical)"
    )


def test_oracle_mode_end_to_end_paraphrase_retrieval():
    """Concept vectors built from a video's own captions retrieve that video
    top-1 for >=95% of held-out paraphrase queries."""
    rng = np.random.default_rng(20240605)
    vocab = [f"w{i:03d}" for i in range(300)]
    n_videos = 200

    def caption_tree(words):
        leaves = " ".join(f"(NN {w})" for w in words)
        return parse_bracketed(f"(NP {leaves})")

    video_concepts = {}
    caption_trees = {}
    all_captions = []
    for vi in range(n_videos):
        video_id = f"v{vi:03d}"
        concepts = [vocab[i] for i in rng.choice(len(vocab), size=6, replace=False)]
        video_concepts[video_id] = concepts
        trees = []
        for _ in range(3):
            order = [concepts[i] for i in rng.permutation(6)]
            trees.append(caption_tree(order))
        caption_trees[video_id] = trees
        all_captions.extend(trees)

    bank = build_bank(count_concepts(all_captions, CFG), min_freq=1)
    vectors = [
        captions_to_video_concept_vector(caption_trees[vid], bank, CFG, item_id=vid)
        for vid in sorted(video_concepts)
    ]
    index = build_index(None, SparseStore(vectors=vectors), bank)

    hits = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for video_id, concepts in video_concepts.items():
            held_out = [concepts[i] for i in rng.permutation(6)[:5]]
            qvec = text_to_concept_vector(
                caption_tree(held_out), bank, Binary(), CFG, item_id=video_id
            )
            run = search(
                index,
                SearchRequest(
                    query_id=video_id, mode=SearchMode.CONCEPT,
                    concept_vector=qvec, k=10,
                ),
            )
            if run.entries and run.entries[0].item_id == video_id:
                hits += 1
    rate = hits / n_videos
    assert rate >= 0.95, f"top-1 rate {rate:.3f} below 0.95"
    report(f"oracle-mode end-to-end (top-1 rate {rate:.3f} over {n_videos} videos)")


def test_frame_schedule_constants():
    """18 s yields exactly five timestamps 3.6 s apart; 2 s yields one."""
    times = frame_schedule(18.0)
    assert len(times) == 5
    assert times == pytest.approx([1.8, 5.4, 9.0, 12.6, 16.2], rel=1e-12)
    gaps = [b - a for a, b in zip(times, times[1:])]
    assert gaps == pytest.approx([3.6] * 4, rel=1e-12)
    assert frame_schedule(2.0) == pytest.approx([1.0], rel=1e-12)
    report("frame schedule (18.0 -> 5 @ 3.6s, 2.0 -> 1)")
