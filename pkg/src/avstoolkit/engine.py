"""Corpus index and exact top-k retrieval in three modes.

An immutable `CorpusIndex` hosts both item-side representations: a
contiguous dense embedding block (zero row = missing) and an inverted
index over concept ids (no postings = missing).  Searches score by
cosine — sparse for concept mode, dense for embedding mode, and a
linear blend `alpha * dense + (1 - alpha) * sparse` for fusion — and
return exact top-k lists with deterministic tie-breaking by ascending
item id.  Scores accumulate at 64-bit regardless of the 32-bit storage.

Ordinals are assigned in ascending item-id order, so ordinal order and
id order coincide; every tie-break below leans on that.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from .concepts import ConceptBank, bank_to_tsv, parse_bank
from .vectors import (
    ConceptVector,
    DenseStore,
    DimensionMismatch,
    EmbeddingRecord,
    SparseStore,
)

__all__ = [
    "DuplicateId",
    "ModeInputMissing",
    "SearchMode",
    "SearchRequest",
    "RunEntry",
    "RunList",
    "CorpusIndex",
    "build_index",
    "search",
    "batch_search",
    "write_run_file",
    "read_run_file",
    "save_index",
    "load_index",
]

DEFAULT_SEARCH_DEPTH = 1000


class DuplicateId(ValueError):
    """The same item id appeared twice within one store."""


class ModeInputMissing(ValueError):
    """The request's mode needs a query representation that is absent."""


class SearchMode(str, Enum):
    CONCEPT = "concept"
    EMBEDDING = "embedding"
    FUSION = "fusion"


@dataclass(frozen=True)
class SearchRequest:
    query_id: str
    mode: SearchMode
    embedding: Optional[EmbeddingRecord] = None
    concept_vector: Optional[ConceptVector] = None
    alpha: float = 0.5
    k: int = DEFAULT_SEARCH_DEPTH

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class RunEntry:
    item_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RunList:
    """Ranked retrieval output: contiguous 1-based ranks, non-increasing scores."""

    query_id: str
    entries: tuple[RunEntry, ...]

    def __post_init__(self):
        for i, e in enumerate(self.entries):
            if e.rank != i + 1:
                raise ValueError(
                    f"run {self.query_id!r}: rank {e.rank} at position {i}"
                )

    def item_ids(self) -> list[str]:
        return [e.item_id for e in self.entries]


@dataclass
class CorpusIndex:
    """Immutable after build; safe for fully parallel read-only searches."""

    item_ids: list[str]
    dense: np.ndarray
    dense_norms: np.ndarray
    postings: dict[int, tuple[np.ndarray, np.ndarray]]
    sparse_norms: np.ndarray
    bank: ConceptBank
    ordinal_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.ordinal_of:
            self.ordinal_of = {item: i for i, item in enumerate(self.item_ids)}

    @property
    def size(self) -> int:
        return len(self.item_ids)

    @property
    def dim(self) -> int:
        return self.dense.shape[1]


def build_index(
    embeddings: Optional[DenseStore],
    concept_vectors: Optional[SparseStore],
    bank: ConceptBank,
) -> CorpusIndex:
    """Join the two stores on item id (union) into a searchable index.

    Raises DuplicateId for repeated ids within a store and ValueError if
    an item ends up with neither representation or references a concept
    id outside the bank.
    """
    dense_ids = embeddings.ids if embeddings is not None else []
    if len(set(dense_ids)) != len(dense_ids):
        seen: set[str] = set()
        for item in dense_ids:
            if item in seen:
                raise DuplicateId(f"duplicate id {item!r} in dense store")
            seen.add(item)
    sparse_vecs = concept_vectors.vectors if concept_vectors is not None else []
    sparse_ids = [v.item_id for v in sparse_vecs]
    if len(set(sparse_ids)) != len(sparse_ids):
        seen = set()
        for item in sparse_ids:
            if item in seen:
                raise DuplicateId(f"duplicate id {item!r} in sparse store")
            seen.add(item)

    item_ids = sorted(set(dense_ids) | set(sparse_ids))
    n = len(item_ids)
    ordinal_of = {item: i for i, item in enumerate(item_ids)}

    dim = embeddings.dim if embeddings is not None and n > 0 else 0
    dense = np.zeros((n, dim), dtype=np.float32)
    if embeddings is not None and embeddings.ids:
        ords = np.fromiter(
            (ordinal_of[item] for item in embeddings.ids),
            dtype=np.int64,
            count=len(embeddings.ids),
        )
        dense[ords] = embeddings.matrix
    dense_norms = np.sqrt(np.einsum("nd,nd->n", dense, dense, dtype=np.float64))

    posting_lists: dict[int, tuple[list[int], list[float]]] = {}
    sparse_norms = np.zeros(n, dtype=np.float64)
    for vec in sorted(sparse_vecs, key=lambda v: ordinal_of[v.item_id]):
        ordinal = ordinal_of[vec.item_id]
        sq = 0.0
        for cid in sorted(vec.weights):
            if cid >= bank.n:
                raise ValueError(
                    f"item {vec.item_id!r} references concept id {cid} "
                    f"outside bank of size {bank.n}"
                )
            w = vec.weights[cid]
            ords, ws = posting_lists.setdefault(cid, ([], []))
            ords.append(ordinal)
            ws.append(w)
            sq += w * w
        sparse_norms[ordinal] = np.sqrt(sq)

    postings = {
        cid: (np.asarray(ords, dtype=np.uint32), np.asarray(ws, dtype=np.float64))
        for cid, (ords, ws) in posting_lists.items()
    }

    both_missing = (dense_norms == 0.0) & (sparse_norms == 0.0)
    if n > 0 and both_missing.any():
        offender = item_ids[int(np.argmax(both_missing))]
        raise ValueError(
            f"item {offender!r} has neither an embedding nor a concept vector"
        )
    return CorpusIndex(
        item_ids=item_ids,
        dense=dense,
        dense_norms=dense_norms,
        postings=postings,
        sparse_norms=sparse_norms,
        bank=bank,
        ordinal_of=ordinal_of,
    )


def _concept_scores(index: CorpusIndex, query: ConceptVector) -> np.ndarray:
    """Cosine of the query against every item's concept vector.

    Touches only the posting lists of the query's support; items without
    concept vectors (or with disjoint support) score exactly 0.
    """
    scores = np.zeros(index.size, dtype=np.float64)
    qnorm = query.norm()
    if qnorm == 0.0:
        return scores
    for cid in sorted(query.weights):
        if cid >= index.bank.n:
            raise ValueError(
                f"query {query.item_id!r} references concept id {cid} "
                f"outside bank of size {index.bank.n}"
            )
        posting = index.postings.get(cid)
        if posting is None:
            continue
        ordinals, weights = posting
        scores[ordinals] += query.weights[cid] * weights
    denom = qnorm * index.sparse_norms
    np.divide(scores, denom, out=scores, where=denom > 0.0)
    return scores


def _embedding_scores(index: CorpusIndex, query: EmbeddingRecord) -> np.ndarray:
    """Cosine of the query against every dense row; zero rows score 0."""
    if index.dim == 0:
        return np.zeros(index.size, dtype=np.float64)
    q = query.values
    if q.shape[0] != index.dim:
        raise DimensionMismatch(
            f"query dimension {q.shape[0]} != index dimension {index.dim}"
        )
    q64 = q.astype(np.float64)
    qnorm = float(np.sqrt(q64 @ q64))
    scores = np.einsum("nd,d->n", index.dense, q, dtype=np.float64)
    denom = qnorm * index.dense_norms
    out = np.zeros(index.size, dtype=np.float64)
    np.divide(scores, denom, out=out, where=denom > 0.0)
    return out


def _top_k(index: CorpusIndex, scores: np.ndarray, k: int) -> tuple[RunEntry, ...]:
    """Exact top-k with ties broken by ascending item id (== ascending ordinal)."""
    n = scores.shape[0]
    if n == 0:
        return ()
    k_eff = min(k, n)
    part = np.argpartition(scores, n - k_eff)[n - k_eff:]
    threshold = scores[part].min()
    above = np.flatnonzero(scores > threshold)
    at = np.flatnonzero(scores == threshold)
    selected = np.concatenate([above, at[: k_eff - above.shape[0]]])
    order = np.lexsort((selected, -scores[selected]))
    ranked = selected[order]
    return tuple(
        RunEntry(item_id=index.item_ids[o], score=float(scores[o]), rank=r + 1)
        for r, o in enumerate(ranked)
    )


def search(index: CorpusIndex, req: SearchRequest) -> RunList:
    """Score the whole corpus under the request's mode and return exact top-k."""
    mode = req.mode
    if mode in (SearchMode.CONCEPT, SearchMode.FUSION) and req.concept_vector is None:
        raise ModeInputMissing(f"{mode.value} search needs a concept vector")
    if mode in (SearchMode.EMBEDDING, SearchMode.FUSION) and req.embedding is None:
        raise ModeInputMissing(f"{mode.value} search needs a query embedding")

    if mode is SearchMode.CONCEPT:
        scores = _concept_scores(index, req.concept_vector)
    elif mode is SearchMode.EMBEDDING:
        scores = _embedding_scores(index, req.embedding)
    else:
        # Endpoint alphas degenerate exactly to the single modes.
        if req.alpha == 1.0:
            scores = _embedding_scores(index, req.embedding)
        elif req.alpha == 0.0:
            scores = _concept_scores(index, req.concept_vector)
        else:
            scores = req.alpha * _embedding_scores(index, req.embedding) + (
                1.0 - req.alpha
            ) * _concept_scores(index, req.concept_vector)
    return RunList(query_id=req.query_id, entries=_top_k(index, scores, req.k))


def batch_search(
    index: CorpusIndex,
    requests: Sequence[SearchRequest],
    threads: int = 1,
) -> list[Union[RunList, Exception]]:
    """Map `search` over requests; results keep request order and are
    independent of the thread count.  A failing request yields its
    exception in place without aborting the rest."""
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    def run_one(req: SearchRequest) -> Union[RunList, Exception]:
        try:
            return search(index, req)
        except Exception as exc:  # isolated per request by contract
            return exc

    if threads == 1 or len(requests) <= 1:
        return [run_one(req) for req in requests]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_one, requests))


def write_run_file(
    runs: Iterable[RunList], path_or_file: Union[str, IO[str]], tag: str = "avstk"
) -> None:
    """TREC 6-column run format, scores printed with 6 decimal places."""
    if isinstance(path_or_file, str):
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            _write_runs(runs, fh, tag)
    else:
        _write_runs(runs, path_or_file, tag)


def _write_runs(runs: Iterable[RunList], fh: IO[str], tag: str) -> None:
    for run in runs:
        for e in run.entries:
            fh.write(f"{run.query_id} Q0 {e.item_id} {e.rank} {e.score:.6f} {tag}\n")


def read_run_file(path: str) -> list[RunList]:
    """Read a TREC run file; per-query entries keep file order and are
    re-ranked 1..n."""
    per_query: dict[str, list[tuple[str, float]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            qid, _, item_id, _, score_str, _ = parts
            try:
                score = float(score_str)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad score {score_str!r}") from exc
            if qid not in per_query:
                per_query[qid] = []
                order.append(qid)
            per_query[qid].append((item_id, score))
    return [
        RunList(
            query_id=qid,
            entries=tuple(
                RunEntry(item_id=item, score=score, rank=i + 1)
                for i, (item, score) in enumerate(per_query[qid])
            ),
        )
        for qid in order
    ]


_AVSI_MAGIC = b"AVSI"
_AVSI_VERSION = 1


def save_index(index: CorpusIndex, path: str) -> None:
    """Persist an index (ids, dense block, postings, embedded bank).

    Norms are recomputed on load, keeping the file minimal and the
    output byte-deterministic for identical inputs.
    """
    bank_bytes = bank_to_tsv(index.bank).encode("utf-8")

    with open(path, "wb") as fh:
        fh.write(_AVSI_MAGIC)
        fh.write(
            struct.pack(
                "<HIQQ", _AVSI_VERSION, index.dim, index.size, index.bank.n
            )
        )
        for item in index.item_ids:
            encoded = item.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
        fh.write(index.dense.astype("<f4", copy=False).tobytes())
        fh.write(struct.pack("<Q", len(index.postings)))
        for cid in sorted(index.postings):
            ordinals, weights = index.postings[cid]
            fh.write(struct.pack("<IQ", cid, ordinals.shape[0]))
            fh.write(ordinals.astype("<u4", copy=False).tobytes())
            fh.write(weights.astype("<f8", copy=False).tobytes())
        fh.write(struct.pack("<Q", len(bank_bytes)))
        fh.write(bank_bytes)


def load_index(path: str) -> CorpusIndex:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _AVSI_MAGIC:
            raise ValueError(f"{path}: not an AVSI index (magic {magic!r})")
        header = fh.read(22)
        if len(header) != 22:
            raise ValueError(f"{path}: truncated AVSI header")
        version, dim, count, bank_n = struct.unpack("<HIQQ", header)
        if version != _AVSI_VERSION:
            raise ValueError(f"{path}: unsupported AVSI version {version}")
        item_ids = []
        for _ in range(count):
            (id_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
            item_ids.append(_read_exact(fh, id_len, path).decode("utf-8"))
        dense = np.frombuffer(
            _read_exact(fh, 4 * count * dim, path), dtype="<f4"
        ).reshape(count, dim)
        dense = np.ascontiguousarray(dense)
        (num_lists,) = struct.unpack("<Q", _read_exact(fh, 8, path))
        postings: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for _ in range(num_lists):
            cid, length = struct.unpack("<IQ", _read_exact(fh, 12, path))
            ordinals = np.frombuffer(
                _read_exact(fh, 4 * length, path), dtype="<u4"
            ).copy()
            weights = np.frombuffer(
                _read_exact(fh, 8 * length, path), dtype="<f8"
            ).copy()
            postings[cid] = (ordinals, weights)
        (bank_len,) = struct.unpack("<Q", _read_exact(fh, 8, path))
        bank = parse_bank(
            _read_exact(fh, bank_len, path).decode("utf-8"), name=f"{path}#bank"
        )
        if bank.n != bank_n:
            raise ValueError(
                f"{path}: header bank size {bank_n} != embedded bank {bank.n}"
            )
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after index payload")

    dense_norms = np.sqrt(np.einsum("nd,nd->n", dense, dense, dtype=np.float64))
    sparse_sq = np.zeros(count, dtype=np.float64)
    for ordinals, weights in postings.values():
        np.add.at(sparse_sq, ordinals, weights * weights)
    return CorpusIndex(
        item_ids=item_ids,
        dense=dense,
        dense_norms=dense_norms,
        postings=postings,
        sparse_norms=np.sqrt(sparse_sq),
        bank=bank,
    )


def _read_exact(fh: IO[bytes], n: int, path: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"{path}: truncated index (wanted {n} bytes, got {len(data)})")
    return data
