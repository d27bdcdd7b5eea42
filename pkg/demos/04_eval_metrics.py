"""Evaluating runs, with and without sampled judgments.

Large test collections are never judged exhaustively: pools are split
into strata and only a sample of each stratum gets judged.  Inferred AP
estimates what AP would have been under full judgments.  This demo
builds a synthetic query where we know every judgment, then hides half
of one stratum and shows the estimate staying close to the true value.
"""

import numpy as np

from avstoolkit.engine import RunEntry, RunList
from avstoolkit.evaluation import (
    Qrels,
    StrataSpec,
    Stratum,
    average_precision,
    degenerate_strata,
    evaluate,
    inf_ap,
    render_report,
)

rng = np.random.default_rng(42)
items = [f"shot{i:03d}" for i in range(60)]
truth = {item: int(rng.random() < 0.3) for item in items}
order = [items[i] for i in rng.permutation(len(items))]
run = RunList(
    query_id="q",
    entries=tuple(
        RunEntry(item, float(len(order) - i), i + 1) for i, item in enumerate(order)
    ),
)

# Fully judged: inferred AP collapses to plain AP (up to the estimator's
# epsilon smoothing).
full = Qrels()
for item, judgment in truth.items():
    full.add("q", "pool", item, judgment)
ap = average_precision(run, full, depth=60)
iap_full = inf_ap(run, full, degenerate_strata(full), depth=60)
print(f"full judgments:    AP={ap:.6f}  infAP={iap_full:.6f}")

# Now split the pool: the top stratum stays fully judged, the deep
# stratum keeps only half of its judgments (sampling rate 0.5).
top_pool, deep_pool = items[:30], items[30:]
sampled_deep = [deep_pool[i] for i in rng.permutation(30)[:15]]
partial = Qrels()
for item in top_pool:
    partial.add("q", "top", item, truth[item])
for item in sampled_deep:
    partial.add("q", "deep", item, truth[item])
strata = StrataSpec(
    strata={
        "q": {
            "top": Stratum(30, 30, frozenset(top_pool)),
            "deep": Stratum(30, 15, frozenset(deep_pool)),
        }
    }
)
iap_sampled = inf_ap(run, partial, strata, depth=60)
print(f"half-judged pool:  infAP={iap_sampled:.6f}  (true AP {ap:.6f})")

# The report assembles mAP/xinfAP, R@K and MedR over all queries.
report = evaluate([run], full, depth=60)
print("\n" + render_report(report, per_query=True))
