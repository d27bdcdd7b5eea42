import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avstoolkit.concepts import (
    Concept,
    ConceptBank,
    ConceptCounts,
    ConceptKind,
    NormalizationConfig,
    bank_stats,
    bank_to_tsv,
    build_bank,
    count_concepts,
    extract_concept_counts,
    extract_concepts,
    lemmatize,
    load_bank,
    load_normalization_config,
    normalize_tokens,
    save_bank,
)
from avstoolkit.treebank import parse_bracketed

CFG = NormalizationConfig()


def surfaces(concepts):
    return {c.surface for c in concepts}


class TestNormalization:
    def test_stopwords_dropped(self):
        assert normalize_tokens(["in", "front", "of", "a", "brick", "wall"], CFG) == [
            "in",
            "front",
            "brick",
            "wall",
        ]

    def test_irregular_noun(self):
        assert normalize_tokens(["two", "men"], CFG) == ["two", "man"]

    def test_possessive_and_gerund(self):
        assert normalize_tokens(["holding", "his", "hand"], CFG) == ["hold", "hand"]

    def test_all_stopwords(self):
        assert normalize_tokens(["the", "The", "a"], CFG) == []

    def test_keeps_function_words_outside_stopword_list(self):
        # "and", "to", "on" survive: the bank needs them inside phrases
        assert normalize_tokens(["man", "and", "woman"], CFG) == ["man", "and", "woman"]
        assert normalize_tokens(["to", "his", "face"], CFG) == ["to", "face"]
        assert normalize_tokens(["on", "the", "floor"], CFG) == ["on", "floor"]

    @pytest.mark.parametrize(
        "token,lemma",
        [
            ("dogs", "dog"),
            ("boxes", "box"),
            ("dishes", "dish"),
            ("babies", "baby"),
            ("glass", "glass"),
            ("bus", "bus"),
            ("gas", "gas"),
            ("walks", "walk"),
            ("walked", "walk"),
            ("walking", "walk"),
            ("stopped", "stop"),
            ("running", "run"),
            ("sitting", "sit"),
            ("dancing", "dance"),
            ("making", "make"),
            ("falling", "fall"),
            ("playing", "play"),
            ("going", "go"),
            ("used", "use"),
            ("building", "building"),
            ("during", "during"),
            ("string", "string"),
            ("men", "man"),
            ("children", "child"),
            ("held", "hold"),
            ("face", "face"),
        ],
    )
    def test_lemmatizer_rules(self, token, lemma):
        assert lemmatize(token, CFG) == lemma

    def test_phrase_bounds_validation(self):
        with pytest.raises(ValueError):
            NormalizationConfig(min_phrase_tokens=1)
        with pytest.raises(ValueError):
            NormalizationConfig(min_phrase_tokens=3, max_phrase_tokens=2)


class TestExtraction:
    def test_adjective_np(self):
        tree = parse_bracketed("(NP (DT a) (JJ young) (NN man))")
        concepts = extract_concepts(tree, CFG)
        assert surfaces(concepts) == {"man", "young man"}
        by_surface = {c.surface: c for c in concepts}
        assert by_surface["man"].kinds == frozenset({ConceptKind.NOUN})
        assert by_surface["young man"].kinds == frozenset({ConceptKind.NOUN_PHRASE})

    def test_verb_phrase(self):
        tree = parse_bracketed("(VP (VBZ sits) (PRT (RP down)))")
        concepts = extract_concepts(tree, CFG)
        assert surfaces(concepts) == {"sit", "sit down"}
        by_surface = {c.surface: c for c in concepts}
        assert by_surface["sit down"].kinds == frozenset({ConceptKind.VERB_PHRASE})

    def test_single_noun(self):
        concepts = extract_concepts(parse_bracketed("(NN dog)"), CFG)
        assert surfaces(concepts) == {"dog"}

    def test_auxiliary_verbs_skipped(self):
        tree = parse_bracketed("(VP (VBZ is) (VP (VBG running)))")
        concepts = extract_concepts(tree, CFG)
        assert "is" not in surfaces(concepts)
        assert "run" in surfaces(concepts)

    def test_prepositional_phrase_with_nesting(self):
        text = (
            "(PP (IN in) (NP (NP (NN front)) (PP (IN of) "
            "(NP (DT a) (NN brick) (NN wall)))))"
        )
        concepts = extract_concepts(parse_bracketed(text), CFG)
        assert "in front brick wall" in surfaces(concepts)

    def test_phrase_length_cap(self):
        # 6 normalized tokens: beyond the default cap of 4, no phrase emitted
        text = (
            "(NP (NN cat) (NN dog) (NN bird) (NN fish) (NN mouse) (NN horse))"
        )
        concepts = extract_concepts(parse_bracketed(text), CFG)
        assert all(not c.is_phrase for c in concepts)

    def test_descendants_visited_even_when_parent_emits(self):
        text = "(NP (NP (JJ young) (NN man)) (CC and) (NP (JJ old) (NN woman)))"
        concepts = extract_concepts(parse_bracketed(text), CFG)
        assert {"young man", "old woman"} <= surfaces(concepts)

    def test_duplicate_surfaces_merge_kinds(self):
        # "fish" as noun and verb in one sentence: one concept, two kinds
        tree = parse_bracketed("(S (NP (NN fish)) (VP (VBP fish)))")
        concepts = extract_concepts(tree, CFG)
        by_surface = {c.surface: c for c in concepts}
        assert by_surface["fish"].kinds == frozenset(
            {ConceptKind.NOUN, ConceptKind.VERB}
        )

    def test_extract_concept_counts_multiplicity(self):
        tree = parse_bracketed("(NP (NN dog) (CC and) (NN dog))")
        counts = extract_concept_counts(tree, CFG)
        assert counts["dog"][0] == 2


class TestCounting:
    def test_repeated_corpus(self):
        tree = parse_bracketed("(NP (DT a) (JJ young) (NN man))")
        counts = count_concepts([tree] * 25, CFG)
        assert counts.frequencies["man"] == 25
        assert counts.frequencies["young man"] == 25

    def test_empty_corpus(self):
        counts = count_concepts([], CFG)
        assert counts.frequencies == {}

    def test_per_sentence_dedup(self):
        tree = parse_bracketed("(NP (NN dog) (CC and) (NN dog))")
        counts = count_concepts([tree], CFG)
        assert counts.frequencies["dog"] == 1

    def test_split_merge_equals_joint(self):
        trees = [
            parse_bracketed("(NP (DT a) (JJ young) (NN man))"),
            parse_bracketed("(VP (VBZ sits) (PRT (RP down)))"),
            parse_bracketed("(NN dog)"),
            parse_bracketed("(NP (NN dog))"),
        ] * 3
        joint = count_concepts(trees, CFG)
        left = count_concepts(trees[:5], CFG)
        right = count_concepts(trees[5:], CFG)
        merged = left.merge(right)
        assert merged.frequencies == joint.frequencies
        assert merged.kinds == joint.kinds

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=11), st.randoms(use_true_random=False))
    def test_merge_of_random_splits(self, cut, rnd):
        pool = [
            "(NP (DT a) (NN man))",
            "(VP (VBG running))",
            "(NN dog)",
            "(PP (IN on) (NP (DT the) (NN floor)))",
        ]
        texts = [rnd.choice(pool) for _ in range(11)]
        trees = [parse_bracketed(t) for t in texts]
        joint = count_concepts(trees, CFG)
        merged = count_concepts(trees[:cut], CFG).merge(count_concepts(trees[cut:], CFG))
        assert merged.frequencies == joint.frequencies


class TestBank:
    def _counts(self, table):
        counts = ConceptCounts()
        for surface, freq in table.items():
            counts.frequencies[surface] = freq
            kind = ConceptKind.NOUN if " " not in surface else ConceptKind.NOUN_PHRASE
            counts.kinds[surface] = {kind}
        return counts

    def test_threshold_boundary(self):
        bank = build_bank(self._counts({"man": 25, "rare phrase": 19}), min_freq=20)
        assert bank.n == 1
        assert bank.entries[0].concept.surface == "man"
        assert bank.entries[0].id == 0

    def test_empty_counts(self):
        bank = build_bank(ConceptCounts(), min_freq=20)
        assert bank.n == 0

    def test_ordering_rule(self):
        bank = build_bank(self._counts({"a": 30, "b": 30, "c": 40}), min_freq=20)
        assert [(e.concept.surface, e.id) for e in bank.entries] == [
            ("c", 0),
            ("a", 1),
            ("b", 2),
        ]

    def test_monotone_in_min_freq(self):
        counts = self._counts({"a": 30, "b": 25, "c": 40, "d": 21})
        low = build_bank(counts, min_freq=20)
        high = build_bank(counts, min_freq=25)
        low_surfaces = [e.concept.surface for e in low.entries]
        high_surfaces = [e.concept.surface for e in high.entries]
        assert set(high_surfaces) <= set(low_surfaces)
        kept_in_order = [s for s in low_surfaces if s in set(high_surfaces)]
        assert kept_in_order == high_surfaces

    def test_lookup(self):
        bank = build_bank(self._counts({"man": 25, "young man": 30}), min_freq=20)
        assert "man" in bank
        assert bank.id_of("young man") == 0
        assert bank.id_of("absent") is None
        assert bank.entry_of(1).concept.surface == "man"

    def test_tsv_roundtrip_and_determinism(self, tmp_path):
        bank = build_bank(
            self._counts({"man": 25, "young man": 30, "dog": 25}), min_freq=20
        )
        p1, p2 = str(tmp_path / "b1.tsv"), str(tmp_path / "b2.tsv")
        save_bank(bank, p1)
        save_bank(bank, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()
        assert load_bank(p1) == bank

    def test_tsv_header_validated(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("nonsense\n")
        with pytest.raises(ValueError, match="header"):
            load_bank(str(path))

    def test_bank_stats_bands(self):
        counts = ConceptCounts()
        for surface, freq in (("a b", 20), ("c d", 40), ("e f", 150), ("word", 99)):
            counts.frequencies[surface] = freq
            kind = ConceptKind.NOUN if " " not in surface else ConceptKind.NOUN_PHRASE
            counts.kinds[surface] = {kind}
        stats = bank_stats(build_bank(counts, min_freq=20))
        assert stats.n == 4
        assert stats.phrase_count == 3
        assert stats.band_counts == (2, 0, 1)
        assert stats.band_fractions == pytest.approx((2 / 3, 0.0, 1 / 3))
        assert stats.has_phrases

    def test_bank_stats_no_phrases(self):
        stats = bank_stats(build_bank(self._counts({"man": 25}), min_freq=20))
        assert not stats.has_phrases
        assert stats.band_fractions == (0.0, 0.0, 0.0)

    def test_deterministic_bank_from_corpus(self):
        trees = [parse_bracketed("(NP (DT a) (JJ young) (NN man))")] * 21
        one = bank_to_tsv(build_bank(count_concepts(trees, CFG), 20))
        shuffled = list(trees)
        random.Random(7).shuffle(shuffled)
        two = bank_to_tsv(build_bank(count_concepts(shuffled, CFG), 20))
        assert one == two


class TestConceptInvariants:
    def test_word_concept_must_be_single_token(self):
        with pytest.raises(ValueError):
            Concept("two words", frozenset({ConceptKind.NOUN}))

    def test_phrase_concept_needs_two_tokens(self):
        with pytest.raises(ValueError):
            Concept("word", frozenset({ConceptKind.NOUN_PHRASE}))

    def test_surface_shape(self):
        with pytest.raises(ValueError):
            Concept(" padded ", frozenset({ConceptKind.NOUN}))
        with pytest.raises(ValueError):
            Concept("UPPER", frozenset({ConceptKind.NOUN}))
        with pytest.raises(ValueError):
            Concept("", frozenset({ConceptKind.NOUN}))


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "norm.cfg"
    path.write_text(
        "# comment\n"
        "stopwords = a the of\n"
        "auxiliary_verbs = is are\n"
        "irregular_nouns = men:man feet:foot\n"
        "irregular_verbs = held:hold\n"
        "min_phrase_tokens = 2\n"
        "max_phrase_tokens = 3\n"
    )
    cfg = load_normalization_config(str(path))
    assert cfg.stopwords == frozenset({"a", "the", "of"})
    assert cfg.irregular_nouns == {"men": "man", "feet": "foot"}
    assert cfg.max_phrase_tokens == 3


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("frobnicate = yes\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_normalization_config(str(path))
