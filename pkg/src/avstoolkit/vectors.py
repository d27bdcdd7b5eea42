"""Query/video vector representations and cosine similarity.

Two carriers live here: dense embeddings (fixed dimension d per store)
and sparse concept vectors (non-negative weights over concept-bank ids).
Both are scored with cosine similarity; empty or zero vectors score 0
under a warning rather than raising, so that out-of-vocabulary queries
still produce complete (if uninformative) rankings.

Dense stores persist in a compact binary format (magic ``AVSV``), sparse
stores as JSONL.  Values are stored at 32-bit precision; similarity
accumulation happens at 64-bit.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .concepts import ConceptBank, NormalizationConfig, extract_concept_counts
from .treebank import Node, ParseTree

__all__ = [
    "EmbeddingRecord",
    "ConceptVector",
    "Binary",
    "TermFrequency",
    "TfIdf",
    "WeightingScheme",
    "DenseStore",
    "SparseStore",
    "DimensionMismatch",
    "ZeroVectorWarning",
    "text_to_concept_vector",
    "captions_to_video_concept_vector",
    "cosine_dense",
    "cosine_sparse",
    "save_dense_store",
    "load_dense_store",
    "save_sparse_store",
    "load_sparse_store",
]


class DimensionMismatch(ValueError):
    """Dense vectors of incompatible dimensions were combined."""


class ZeroVectorWarning(UserWarning):
    """A cosine argument had zero norm; the score was defined as 0."""


@dataclass(frozen=True)
class EmbeddingRecord:
    """Dense d-dimensional representation of one item (video or query)."""

    item_id: str
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32).reshape(-1)
        if arr.size < 1:
            raise ValueError(f"embedding {self.item_id!r} must have d >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"embedding {self.item_id!r} has non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ConceptVector:
    """Sparse non-negative weights over concept-bank ids.

    Zero weights are dropped on construction; the empty vector is valid
    and represents a fully out-of-vocabulary item.
    """

    item_id: str
    weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for cid, w in self.weights.items():
            cid = int(cid)
            w = float(w)
            if cid < 0:
                raise ValueError(f"concept id must be >= 0, got {cid}")
            if not math.isfinite(w) or w < 0:
                raise ValueError(
                    f"weight for concept {cid} must be finite and >= 0, got {w}"
                )
            if w > 0:
                clean[cid] = w
        object.__setattr__(self, "weights", clean)

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for w in self.weights.values()))


class Binary:
    """Weight 1 for every bank concept present in the text."""

    def weight(self, tf: int, concept_id: int) -> float:
        return 1.0


class TermFrequency:
    """Per-sentence emission count."""

    def weight(self, tf: int, concept_id: int) -> float:
        return float(tf)


@dataclass(frozen=True)
class TfIdf:
    """tf * ln(N / df); every weighted concept must have df >= 1."""

    df: Mapping[int, int]
    corpus_size: int

    def weight(self, tf: int, concept_id: int) -> float:
        df = self.df.get(concept_id, 0)
        if df < 1:
            raise ValueError(f"TfIdf requires df >= 1 for concept {concept_id}")
        return tf * math.log(self.corpus_size / df)


WeightingScheme = Union[Binary, TermFrequency, TfIdf]


def text_to_concept_vector(
    tree: Union[ParseTree, Node],
    bank: ConceptBank,
    scheme: WeightingScheme = Binary(),
    cfg: NormalizationConfig = NormalizationConfig(),
    item_id: str = "",
) -> ConceptVector:
    """Map a sentence's concepts onto bank ids; out-of-bank concepts drop out."""
    weights: dict[int, float] = {}
    for surface, (tf, _kinds) in extract_concept_counts(tree, cfg).items():
        cid = bank.id_of(surface)
        if cid is None:
            continue
        weights[cid] = scheme.weight(tf, cid)
    return ConceptVector(item_id=item_id, weights=weights)


def captions_to_video_concept_vector(
    trees: Sequence[Union[ParseTree, Node]],
    bank: ConceptBank,
    cfg: NormalizationConfig = NormalizationConfig(),
    item_id: str = "",
) -> ConceptVector:
    """Oracle-mode video vector: summed caption term frequencies, L2-normalized.

    Stands in for a trained concept decoder when none is available; an
    all-out-of-bank caption set yields the empty vector, not an error.
    """
    if not trees:
        raise ValueError("need at least one caption tree")
    tf = TermFrequency()
    summed: dict[int, float] = {}
    for tree in trees:
        vec = text_to_concept_vector(tree, bank, tf, cfg)
        for cid, w in vec.weights.items():
            summed[cid] = summed.get(cid, 0.0) + w
    norm = math.sqrt(math.fsum(w * w for w in summed.values()))
    if norm == 0.0:
        return ConceptVector(item_id=item_id, weights={})
    return ConceptVector(
        item_id=item_id, weights={cid: w / norm for cid, w in summed.items()}
    )


def _as_dense(x: Union[EmbeddingRecord, np.ndarray, Sequence[float]]) -> np.ndarray:
    if isinstance(x, EmbeddingRecord):
        return x.values
    return np.asarray(x, dtype=np.float32).reshape(-1)


def cosine_dense(
    a: Union[EmbeddingRecord, np.ndarray, Sequence[float]],
    b: Union[EmbeddingRecord, np.ndarray, Sequence[float]],
) -> float:
    """Cosine similarity in [-1, 1]; zero vectors score 0 with a warning."""
    va, vb = _as_dense(a), _as_dense(b)
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatch(f"dimensions differ: {va.shape[0]} vs {vb.shape[0]}")
    va64 = va.astype(np.float64)
    vb64 = vb.astype(np.float64)
    na = math.sqrt(float(va64 @ va64))
    nb = math.sqrt(float(vb64 @ vb64))
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine of zero vector defined as 0", ZeroVectorWarning)
        return 0.0
    score = float(va64 @ vb64) / (na * nb)
    return min(1.0, max(-1.0, score))


def cosine_sparse(a: ConceptVector, b: ConceptVector) -> float:
    """Cosine over the sparse intersection; non-negative weights bound it to [0, 1]."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine of zero vector defined as 0", ZeroVectorWarning)
        return 0.0
    small, large = (a.weights, b.weights) if len(a.weights) <= len(b.weights) else (
        b.weights,
        a.weights,
    )
    dot = math.fsum(w * large[cid] for cid, w in small.items() if cid in large)
    return min(1.0, max(0.0, dot / (na * nb)))


@dataclass
class DenseStore:
    """All dense embeddings of one corpus side: parallel ids and an (N, d) block."""

    ids: list[str]
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2:
            raise ValueError("dense store matrix must be 2-D (N, d)")
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError(
                f"id count {len(self.ids)} != row count {self.matrix.shape[0]}"
            )
        if self.matrix.shape[0] > 0 and self.matrix.shape[1] < 1:
            raise ValueError("dense store must have d >= 1")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("dense store has non-finite entries")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def record(self, i: int) -> EmbeddingRecord:
        return EmbeddingRecord(item_id=self.ids[i], values=self.matrix[i])


_AVSV_MAGIC = b"AVSV"
_AVSV_VERSION = 1


def save_dense_store(store: DenseStore, path: str) -> None:
    """Write the AVSV binary format (little-endian, see README)."""
    with open(path, "wb") as fh:
        fh.write(_AVSV_MAGIC)
        fh.write(struct.pack("<HIQ", _AVSV_VERSION, store.dim, len(store.ids)))
        for i, item_id in enumerate(store.ids):
            encoded = item_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(store.matrix[i].astype("<f4", copy=False).tobytes())


def load_dense_store(path: str) -> DenseStore:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _AVSV_MAGIC:
            raise ValueError(f"{path}: not an AVSV dense store (magic {magic!r})")
        header = fh.read(14)
        if len(header) != 14:
            raise ValueError(f"{path}: truncated AVSV header")
        version, dim, count = struct.unpack("<HIQ", header)
        if version != _AVSV_VERSION:
            raise ValueError(f"{path}: unsupported AVSV version {version}")
        if count > 0 and dim < 1:
            raise ValueError(f"{path}: d must be >= 1, got {dim}")
        ids: list[str] = []
        matrix = np.empty((count, dim), dtype=np.float32)
        row_bytes = 4 * dim
        for i in range(count):
            (id_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
            ids.append(_read_exact(fh, id_len, path).decode("utf-8"))
            matrix[i] = np.frombuffer(_read_exact(fh, row_bytes, path), dtype="<f4")
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after {count} records")
    return DenseStore(ids=ids, matrix=matrix)


def _read_exact(fh: IO[bytes], n: int, path: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"{path}: truncated record (wanted {n} bytes, got {len(data)})")
    return data


@dataclass
class SparseStore:
    """All concept vectors of one corpus side, ids unique."""

    vectors: list[ConceptVector]

    def __post_init__(self):
        seen = set()
        for vec in self.vectors:
            if vec.item_id in seen:
                raise ValueError(f"duplicate item id {vec.item_id!r} in sparse store")
            seen.add(vec.item_id)


def save_sparse_store(store: SparseStore, path: str) -> None:
    """Write JSONL lines `{"id": ..., "w": {"<bank_id>": weight, ...}}`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for vec in store.vectors:
            weights = {str(cid): vec.weights[cid] for cid in sorted(vec.weights)}
            fh.write(json.dumps({"id": vec.item_id, "w": weights}))
            fh.write("\n")


def load_sparse_store(path: str, top_m: Optional[int] = None) -> SparseStore:
    """Read a sparse store; `top_m` optionally keeps only the m heaviest
    entries per item (ties resolved toward lower concept ids)."""
    vectors = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                weights = {int(k): float(v) for k, v in record["w"].items()}
                item_id = str(record["id"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad sparse record: {exc}") from exc
            if top_m is not None and len(weights) > top_m:
                kept = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:top_m]
                weights = dict(kept)
            vectors.append(ConceptVector(item_id=item_id, weights=weights))
    return SparseStore(vectors=vectors)
