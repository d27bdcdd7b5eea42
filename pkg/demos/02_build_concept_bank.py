"""From caption trees to a multi-word concept bank.

Word-only vocabularies cannot express composition ("hold" + "hand" is
not "hold hand"), so extraction pulls nouns and verbs from the leaves
*and* five phrase types (NP, VP, ADJP, PP, QP) from interior nodes.
Surfaces are normalized (lowercase, stopwords out, rule-based lemmas),
counted once per sentence, and thresholded into the bank.
"""

from avstoolkit.concepts import (
    NormalizationConfig,
    bank_stats,
    bank_to_tsv,
    build_bank,
    count_concepts,
    extract_concepts,
    normalize_tokens,
)
from avstoolkit.treebank import parse_bracketed

cfg = NormalizationConfig()

# Normalization keeps prepositions ("in", "on", "to") because they carry
# the relationships phrases exist to capture, while articles and
# possessives drop out.
print("normalize:", normalize_tokens("in front of a brick wall".split(), cfg))
print("normalize:", normalize_tokens("holding his hand".split(), cfg))

tree = parse_bracketed(
    "(S (NP (DT a) (JJ young) (NN man)) "
    "(VP (VBG holding) (NP (PRP$ his) (NN hand))))"
)
print("\nconcepts of one sentence:")
for concept in extract_concepts(tree, cfg):
    kinds = ",".join(sorted(k.value for k in concept.kinds))
    print(f"  {concept.surface!r} [{kinds}]")

# A corpus is just a stream of trees.  Frequencies count sentences, not
# occurrences, so a repeated word inside one caption contributes once.
corpus = (
    [tree] * 24
    + [parse_bracketed("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))")] * 21
    + [parse_bracketed("(NP (DT a) (JJ rare) (NN pangolin))")] * 19
)
counts = count_concepts(corpus, cfg)
bank = build_bank(counts, min_freq=20)

print(f"\nbank with min_freq=20 ({bank.n} concepts):")
print(bank_to_tsv(bank))

# "rare pangolin" appeared in only 19 sentences and falls below the
# inclusive >= 20 threshold; everything kept has a dense id ordered by
# (frequency desc, surface asc).
stats = bank_stats(bank)
print(f"phrases: {stats.phrase_count} of {stats.n}")
print("phrase frequency bands [min,50] (50,100] (100,inf):", stats.band_fractions)
