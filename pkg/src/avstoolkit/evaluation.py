"""Retrieval metrics over judged runs: AP/mAP, R@K, MedR, and inferred AP
computed from stratified, partially sampled judgment pools.

Judgments may cover only a sample of each pool stratum.  The inferred-AP
estimator reconstructs expected precision at each judged-relevant rank
from per-stratum sampled relevant/nonrelevant counts, smoothed by a
small epsilon, and normalizes by the estimated number of relevant items
R_hat = sum_s rel_sampled(s) / sampling_rate(s).  With complete
judgments in a single stratum at rate 1 this collapses to ordinary
average precision up to epsilon.  Unjudged items are treated as
nonrelevant everywhere; items outside every pool dilute precision (they
count in rank denominators) but contribute to no stratum term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .engine import RunList

__all__ = [
    "StratumViolation",
    "Qrels",
    "Stratum",
    "StrataSpec",
    "QueryMetrics",
    "MetricReport",
    "DEFAULT_EPSILON",
    "load_qrels",
    "load_strata",
    "degenerate_strata",
    "average_precision",
    "inf_ap",
    "xinf_ap",
    "first_relevant_rank",
    "recall_at_k",
    "med_r",
    "evaluate",
    "render_report",
]

DEFAULT_EPSILON = 1e-5
DEFAULT_KS = (1, 5, 10)


class StratumViolation(ValueError):
    """A judged item fell outside its declared stratum."""


@dataclass
class Qrels:
    """Per-query binary judgments plus each judged item's stratum id."""

    judgments: dict[str, dict[str, int]] = field(default_factory=dict)
    strata_of: dict[str, dict[str, str]] = field(default_factory=dict)

    def add(self, query_id: str, stratum_id: str, item_id: str, judgment: int) -> None:
        per_query = self.judgments.setdefault(query_id, {})
        if item_id in per_query:
            raise ValueError(
                f"duplicate judgment for query {query_id!r} item {item_id!r}"
            )
        if judgment not in (0, 1):
            raise ValueError(f"judgment must be 0 or 1, got {judgment}")
        per_query[item_id] = judgment
        self.strata_of.setdefault(query_id, {})[item_id] = stratum_id

    def query_ids(self) -> list[str]:
        return sorted(self.judgments)

    def relevant_count(self, query_id: str) -> int:
        return sum(self.judgments.get(query_id, {}).values())


def load_qrels(path: str) -> Qrels:
    """Read `query_id stratum_id item_id judgment` whitespace-separated lines."""
    qrels = Qrels()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            query_id, stratum_id, item_id, judgment_str = parts
            try:
                judgment = int(judgment_str)
                qrels.add(query_id, stratum_id, item_id, judgment)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return qrels


@dataclass(frozen=True)
class Stratum:
    """One sampled pool stratum; rate = sampled_size / pool_size in (0, 1]."""

    pool_size: int
    sampled_size: int
    membership: Optional[frozenset[str]] = None

    def __post_init__(self):
        if not (self.pool_size >= self.sampled_size >= 1):
            raise ValueError(
                f"need pool_size >= sampled_size >= 1, got "
                f"pool={self.pool_size} sampled={self.sampled_size}"
            )

    @property
    def rate(self) -> float:
        return self.sampled_size / self.pool_size


@dataclass
class StrataSpec:
    """Stratified sampling description: (query, stratum) -> Stratum."""

    strata: dict[str, dict[str, Stratum]] = field(default_factory=dict)

    def for_query(self, query_id: str) -> dict[str, Stratum]:
        return self.strata.get(query_id, {})


def load_strata(sizes_path: str, membership_path: Optional[str] = None) -> StrataSpec:
    """Read the `query_id stratum_id pool_size sampled_size` sidecar, plus an
    optional `query_id stratum_id item_id` membership file.  Without the
    membership file a stratum's pool defaults to its judged items."""
    spec = StrataSpec()
    members: dict[tuple[str, str], set[str]] = {}
    if membership_path is not None:
        with open(membership_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise ValueError(
                        f"{membership_path}:{lineno}: expected 3 columns, got {len(parts)}"
                    )
                query_id, stratum_id, item_id = parts
                members.setdefault((query_id, stratum_id), set()).add(item_id)
    with open(sizes_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(
                    f"{sizes_path}:{lineno}: expected 4 columns, got {len(parts)}"
                )
            query_id, stratum_id, pool_str, sampled_str = parts
            per_query = spec.strata.setdefault(query_id, {})
            if stratum_id in per_query:
                raise ValueError(
                    f"{sizes_path}:{lineno}: duplicate stratum {stratum_id!r} "
                    f"for query {query_id!r}"
                )
            membership = members.get((query_id, stratum_id))
            try:
                per_query[stratum_id] = Stratum(
                    pool_size=int(pool_str),
                    sampled_size=int(sampled_str),
                    membership=frozenset(membership) if membership is not None else None,
                )
            except ValueError as exc:
                raise ValueError(f"{sizes_path}:{lineno}: {exc}") from exc
    for (query_id, stratum_id) in members:
        if stratum_id not in spec.strata.get(query_id, {}):
            raise ValueError(
                f"{membership_path}: membership for undeclared stratum "
                f"{stratum_id!r} of query {query_id!r}"
            )
    return spec


def degenerate_strata(qrels: Qrels) -> StrataSpec:
    """Full-judgment stand-in: every stratum label found in the qrels
    becomes a rate-1 stratum whose pool is exactly its judged items."""
    spec = StrataSpec()
    for query_id, judged_strata in qrels.strata_of.items():
        members: dict[str, set[str]] = {}
        for item, stratum_id in judged_strata.items():
            members.setdefault(stratum_id, set()).add(item)
        spec.strata[query_id] = {
            stratum_id: Stratum(
                pool_size=len(items),
                sampled_size=len(items),
                membership=frozenset(items),
            )
            for stratum_id, items in members.items()
        }
    return spec


def _resolve_strata(
    query_id: str, qrels: Qrels, strata: StrataSpec
) -> tuple[dict[str, Stratum], dict[str, str]]:
    """Per-query strata with memberships resolved, plus item -> stratum map.

    Validates the stratification invariants: judged items must belong to
    a declared stratum and to its membership; memberships are disjoint.
    """
    declared = strata.for_query(query_id)
    judged_strata = qrels.strata_of.get(query_id, {})

    resolved: dict[str, Stratum] = {}
    for stratum_id, stratum in declared.items():
        if stratum.membership is None:
            judged_here = frozenset(
                item for item, sid in judged_strata.items() if sid == stratum_id
            )
            resolved[stratum_id] = Stratum(
                pool_size=stratum.pool_size,
                sampled_size=stratum.sampled_size,
                membership=judged_here,
            )
        else:
            resolved[stratum_id] = stratum

    item_stratum: dict[str, str] = {}
    for stratum_id, stratum in resolved.items():
        for item in stratum.membership:
            if item in item_stratum:
                raise StratumViolation(
                    f"query {query_id!r}: item {item!r} belongs to strata "
                    f"{item_stratum[item]!r} and {stratum_id!r}"
                )
            item_stratum[item] = stratum_id

    for item, stratum_id in judged_strata.items():
        if stratum_id not in resolved:
            raise StratumViolation(
                f"query {query_id!r}: judged item {item!r} cites undeclared "
                f"stratum {stratum_id!r}"
            )
        if item not in resolved[stratum_id].membership:
            raise StratumViolation(
                f"query {query_id!r}: judged item {item!r} outside declared "
                f"membership of stratum {stratum_id!r}"
            )
    return resolved, item_stratum


def average_precision(run: RunList, qrels: Qrels, depth: int = 1000) -> float:
    """AP with unjudged items counted nonrelevant; 0 when nothing is relevant.

    The normalizer is the total judged-relevant count for the query,
    regardless of depth.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    judged = qrels.judgments.get(run.query_id, {})
    total_relevant = sum(judged.values())
    if total_relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for rank, entry in enumerate(run.entries[:depth], start=1):
        if judged.get(entry.item_id) == 1:
            hits += 1
            total += hits / rank
    return total / total_relevant


def inf_ap(
    run: RunList,
    qrels: Qrels,
    strata: StrataSpec,
    depth: int = 1000,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Inferred AP over stratified sampled judgments.

    For each judged-relevant rank k within depth the expected precision is

        E[P@k] = 1/k + ((k-1)/k) * sum_s (|pool_s ∩ top(k-1)| / (k-1))
                 * (rel_s + eps) / (rel_s + nonrel_s + 2 eps)

    with rel_s/nonrel_s the sampled judged counts of stratum s above k,
    the k=1 term equal to 1, and infAP = sum_k E[P@k] / R_hat.  R_hat
    is estimated from all judgments regardless of depth; 0 is returned
    when R_hat is 0.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    query_id = run.query_id
    judged = qrels.judgments.get(query_id, {})
    resolved, item_stratum = _resolve_strata(query_id, qrels, strata)

    rel_sampled: dict[str, int] = {sid: 0 for sid in resolved}
    for item, judgment in judged.items():
        if judgment == 1:
            rel_sampled[item_stratum[item]] += 1
    r_hat = sum(
        rel_sampled[sid] / stratum.rate for sid, stratum in resolved.items()
    )
    if r_hat == 0.0:
        return 0.0

    pool_count = {sid: 0 for sid in resolved}
    rel_count = {sid: 0 for sid in resolved}
    nonrel_count = {sid: 0 for sid in resolved}
    stratum_order = sorted(resolved)

    total = 0.0
    for k, entry in enumerate(run.entries[:depth], start=1):
        judgment = judged.get(entry.item_id)
        if judgment == 1:
            if k == 1:
                expected = 1.0
            else:
                acc = 0.0
                for sid in stratum_order:
                    pooled_above = pool_count[sid]
                    if pooled_above == 0:
                        continue
                    rel = rel_count[sid]
                    nonrel = nonrel_count[sid]
                    acc += (pooled_above / (k - 1)) * (
                        (rel + epsilon) / (rel + nonrel + 2.0 * epsilon)
                    )
                expected = 1.0 / k + ((k - 1) / k) * acc
            total += expected
        sid = item_stratum.get(entry.item_id)
        if sid is not None:
            pool_count[sid] += 1
            if judgment == 1:
                rel_count[sid] += 1
            elif judgment == 0:
                nonrel_count[sid] += 1
    return total / r_hat


def xinf_ap(
    runs: Sequence[RunList],
    qrels: Qrels,
    strata: StrataSpec,
    depth: int = 1000,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Mean per-query infAP over every query in the qrels; a query with no
    run contributes 0."""
    by_query = {run.query_id: run for run in runs}
    query_ids = qrels.query_ids()
    if not query_ids:
        return 0.0
    total = 0.0
    for query_id in query_ids:
        run = by_query.get(query_id)
        if run is not None:
            total += inf_ap(run, qrels, strata, depth, epsilon)
    return total / len(query_ids)


def first_relevant_rank(run: RunList, qrels: Qrels, depth: int = 1000) -> Optional[int]:
    """Rank of the first judged-relevant item within depth, or None."""
    judged = qrels.judgments.get(run.query_id, {})
    for rank, entry in enumerate(run.entries[:depth], start=1):
        if judged.get(entry.item_id) == 1:
            return rank
    return None


def recall_at_k(
    runs: Sequence[RunList], qrels: Qrels, ks: Sequence[int] = DEFAULT_KS, depth: int = 1000
) -> dict[int, float]:
    """R@K = fraction of queries whose first relevant item sits at rank <= K."""
    query_ids = qrels.query_ids()
    if not query_ids:
        return {k: 0.0 for k in ks}
    by_query = {run.query_id: run for run in runs}
    ranks = []
    for query_id in query_ids:
        run = by_query.get(query_id)
        rank = first_relevant_rank(run, qrels, depth) if run is not None else None
        ranks.append(rank if rank is not None else depth + 1)
    return {k: sum(1 for r in ranks if r <= k) / len(ranks) for k in ks}


def med_r(
    runs: Sequence[RunList], qrels: Qrels, depth: int = 1000
) -> Optional[int]:
    """Lower-median first-relevant rank; absent relevants use sentinel depth+1."""
    query_ids = qrels.query_ids()
    if not query_ids:
        return None
    by_query = {run.query_id: run for run in runs}
    ranks = []
    for query_id in query_ids:
        run = by_query.get(query_id)
        rank = first_relevant_rank(run, qrels, depth) if run is not None else None
        ranks.append(rank if rank is not None else depth + 1)
    ranks.sort()
    return ranks[(len(ranks) - 1) // 2]


@dataclass(frozen=True)
class QueryMetrics:
    ap: float
    inf_ap: float
    recall_at: Mapping[int, float]
    first_relevant_rank: Optional[int]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    per_query: Mapping[str, QueryMetrics]
    mean_ap: float
    xinf_ap: float
    med_r: Optional[int]
    mean_recall_at: Mapping[int, float]
    depth: int


def evaluate(
    runs: Sequence[RunList],
    qrels: Qrels,
    strata: Optional[StrataSpec] = None,
    depth: int = 1000,
    ks: Sequence[int] = DEFAULT_KS,
    epsilon: float = DEFAULT_EPSILON,
    threads: int = 1,
) -> MetricReport:
    """Assemble the full metric report over every query in the qrels.

    Without a StrataSpec, judgments are treated as complete (one stratum
    at rate 1), under which infAP tracks AP to within a few epsilon.
    """
    if strata is None:
        strata = degenerate_strata(qrels)
    by_query = {run.query_id: run for run in runs}
    query_ids = qrels.query_ids()

    def eval_one(query_id: str) -> tuple[str, QueryMetrics]:
        run = by_query.get(query_id)
        flags = []
        if qrels.relevant_count(query_id) == 0:
            flags.append("no_relevant")
        if run is None:
            flags.append("missing_run")
            empty = RunList(query_id=query_id, entries=())
            run = empty
        ap = average_precision(run, qrels, depth)
        iap = inf_ap(run, qrels, strata, depth, epsilon)
        rank = first_relevant_rank(run, qrels, depth)
        recall = {k: (1.0 if rank is not None and rank <= k else 0.0) for k in ks}
        return query_id, QueryMetrics(
            ap=ap,
            inf_ap=iap,
            recall_at=recall,
            first_relevant_rank=rank,
            flags=tuple(flags),
        )

    if threads > 1 and len(query_ids) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_query = dict(pool.map(eval_one, query_ids))
    else:
        per_query = dict(eval_one(query_id) for query_id in query_ids)

    n = len(query_ids)
    sentinel = depth + 1
    ranks = sorted(
        (m.first_relevant_rank if m.first_relevant_rank is not None else sentinel)
        for m in per_query.values()
    )
    return MetricReport(
        per_query=per_query,
        mean_ap=(sum(m.ap for m in per_query.values()) / n) if n else 0.0,
        xinf_ap=(sum(m.inf_ap for m in per_query.values()) / n) if n else 0.0,
        med_r=ranks[(n - 1) // 2] if n else None,
        mean_recall_at={
            k: (sum(m.recall_at[k] for m in per_query.values()) / n) if n else 0.0
            for k in ks
        },
        depth=depth,
    )


def render_report(
    report: MetricReport,
    metrics: Iterable[str] = ("xinfap", "map", "recall", "medr"),
    per_query: bool = False,
) -> str:
    """Deterministic text rendering: `metric<TAB>query<TAB>value` lines."""
    wanted = {m.strip().lower() for m in metrics}
    unknown = wanted - {"xinfap", "map", "recall", "medr"}
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    lines = []
    if per_query:
        for query_id in sorted(report.per_query):
            m = report.per_query[query_id]
            if "map" in wanted:
                lines.append(f"ap\t{query_id}\t{m.ap:.6f}")
            if "xinfap" in wanted:
                lines.append(f"infap\t{query_id}\t{m.inf_ap:.6f}")
            if "recall" in wanted or "medr" in wanted:
                rank = m.first_relevant_rank
                lines.append(
                    f"first_rank\t{query_id}\t{rank if rank is not None else 'none'}"
                )
    if "map" in wanted:
        lines.append(f"map\tall\t{report.mean_ap:.6f}")
    if "xinfap" in wanted:
        lines.append(f"xinfap\tall\t{report.xinf_ap:.6f}")
    if "recall" in wanted:
        for k in sorted(report.mean_recall_at):
            lines.append(f"r@{k}\tall\t{report.mean_recall_at[k]:.6f}")
    if "medr" in wanted:
        med = report.med_r
        lines.append(f"medr\tall\t{med if med is not None else 'none'}")
    return "\n".join(lines) + "\n"
