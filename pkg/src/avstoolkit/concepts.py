"""Word/phrase concept extraction and frequency-thresholded bank construction.

Concepts come in two flavours: single words (nouns and verbs read off
preterminal leaves) and multi-word phrases (the yields of NP, VP, ADJP,
PP and QP constituents).  Phrase surfaces pass through the same
normalization pipeline as words — lowercasing, stopword removal and a
deterministic rule-based lemmatizer — so that "holding his hand" and
"hold hand" index to the same surface.  A corpus-wide frequency count
with an inclusive threshold then yields the concept bank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union

from .treebank import Node, ParseTree, walk_nodes, yield_tokens

__all__ = [
    "ConceptKind",
    "Concept",
    "NormalizationConfig",
    "ConceptCounts",
    "BankEntry",
    "ConceptBank",
    "BankStats",
    "lemmatize",
    "normalize_tokens",
    "extract_concepts",
    "extract_concept_counts",
    "count_concepts",
    "build_bank",
    "bank_stats",
    "load_normalization_config",
    "bank_to_tsv",
    "save_bank",
    "load_bank",
    "parse_bank",
]


class ConceptKind(str, Enum):
    NOUN = "noun"
    VERB = "verb"
    NOUN_PHRASE = "noun_phrase"
    VERB_PHRASE = "verb_phrase"
    ADJECTIVE_PHRASE = "adjective_phrase"
    PREPOSITIONAL_PHRASE = "prepositional_phrase"
    QUANTIFIER_PHRASE = "quantifier_phrase"


WORD_KINDS = frozenset({ConceptKind.NOUN, ConceptKind.VERB})

# Interior labels that emit phrase concepts.
PHRASE_LABELS: Mapping[str, ConceptKind] = {
    "NP": ConceptKind.NOUN_PHRASE,
    "VP": ConceptKind.VERB_PHRASE,
    "ADJP": ConceptKind.ADJECTIVE_PHRASE,
    "PP": ConceptKind.PREPOSITIONAL_PHRASE,
    "QP": ConceptKind.QUANTIFIER_PHRASE,
}

DEFAULT_STOPWORDS = frozenset(
    {"a", "an", "the", "of", "'s", "his", "her", "its", "their", "my", "your", "our"}
)

DEFAULT_IRREGULAR_NOUNS: Mapping[str, str] = {
    "men": "man",
    "women": "woman",
    "children": "child",
    "people": "person",
    "feet": "foot",
}

DEFAULT_IRREGULAR_VERBS: Mapping[str, str] = {
    "held": "hold",
    "sat": "sit",
    "stood": "stand",
    "ran": "run",
    "sitting": "sit",
    "standing": "stand",
    "holding": "hold",
    "running": "run",
}

DEFAULT_AUXILIARY_VERBS = frozenset(
    {"be", "is", "are", "was", "were", "been", "being"}
)

_VOWELS = "aeiou"
# Doubled endings kept intact when undoubling stripped stems (fall+ing).
_KEEP_DOUBLE = {"ll", "ss", "zz"}
# Words whose final -s/-es is not a plural/3rd-person marker.
_S_EXCEPTIONS = frozenset(
    {"gas", "bus", "lens", "news", "series", "species", "christmas", "tennis"}
)
# -ing words that are lexical items, not inflections.
_ING_EXCEPTIONS = frozenset(
    {
        "during",
        "morning",
        "evening",
        "building",
        "ceiling",
        "painting",
        "wedding",
        "clothing",
        "something",
        "anything",
        "nothing",
        "everything",
        "thing",
        "king",
    }
)


@dataclass(frozen=True)
class NormalizationConfig:
    """Knobs of the token-normalization pipeline; defaults documented in README."""

    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    irregular_nouns: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_IRREGULAR_NOUNS)
    )
    irregular_verbs: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_IRREGULAR_VERBS)
    )
    auxiliary_verbs: frozenset[str] = DEFAULT_AUXILIARY_VERBS
    min_phrase_tokens: int = 2
    max_phrase_tokens: int = 4

    def __post_init__(self):
        if not (self.max_phrase_tokens >= self.min_phrase_tokens >= 2):
            raise ValueError(
                "phrase length bounds must satisfy max >= min >= 2, got "
                f"min={self.min_phrase_tokens} max={self.max_phrase_tokens}"
            )


def load_normalization_config(path: str) -> NormalizationConfig:
    """Read a plain `key = value` config file.

    Set-valued keys take whitespace- or comma-separated tokens; map-valued
    keys take `surface:lemma` pairs.  Unknown keys are errors.  Keys:
    stopwords, irregular_nouns, irregular_verbs, auxiliary_verbs,
    min_phrase_tokens, max_phrase_tokens.
    """
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            tokens = [t for t in raw.replace(",", " ").split() if t]
            if key in ("stopwords", "auxiliary_verbs"):
                values[key] = frozenset(tokens)
            elif key in ("irregular_nouns", "irregular_verbs"):
                mapping = {}
                for tok in tokens:
                    if ":" not in tok:
                        raise ValueError(
                            f"{path}:{lineno}: expected surface:lemma, got {tok!r}"
                        )
                    surface, _, lemma = tok.partition(":")
                    mapping[surface] = lemma
                values[key] = mapping
            elif key in ("min_phrase_tokens", "max_phrase_tokens"):
                try:
                    values[key] = int(raw)
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {key} must be an integer") from exc
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return NormalizationConfig(**values)  # type: ignore[arg-type]


def _repair_stem(stem: str) -> str:
    # sitt -> sit, stopp -> stop; but fall/miss/buzz keep their doubles
    if (
        len(stem) >= 3
        and stem[-1] == stem[-2]
        and stem[-1] not in _VOWELS
        and stem[-2:] not in _KEEP_DOUBLE
    ):
        return stem[:-1]
    # danc -> dance, hav -> have
    if stem.endswith(("c", "v")):
        return stem + "e"
    # short consonant-vowel-consonant stems lost a silent e: mak -> make
    if len(stem) <= 4 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 2:
        return False
    last, prev = stem[-1], stem[-2]
    if last in _VOWELS or last in "wxy":
        return False
    if prev not in _VOWELS:
        return False
    if len(stem) >= 3 and stem[-3] in _VOWELS:
        return False
    return True


def lemmatize(token: str, cfg: NormalizationConfig) -> str:
    """Deterministic rule-based lemma of a lowercase token.

    Irregular maps win; then -ing/-ed verb endings are stripped with
    consonant-undoubling and silent-e restoration, and -ies/-es/-s noun
    endings are stripped behind a small exception list.
    """
    if token in cfg.irregular_nouns:
        return cfg.irregular_nouns[token]
    if token in cfg.irregular_verbs:
        return cfg.irregular_verbs[token]
    if len(token) >= 5 and token.endswith("ing") and token not in _ING_EXCEPTIONS:
        stem = token[:-3]
        if any(c in _VOWELS for c in stem):
            return _repair_stem(stem)
        return token
    if len(token) >= 4 and token.endswith("ed") and not token.endswith("eed"):
        return _repair_stem(token[:-2])
    if token in _S_EXCEPTIONS:
        return token
    if len(token) >= 5 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) >= 4 and token.endswith("es") and token[:-2].endswith(
        ("s", "x", "z", "ch", "sh", "o")
    ):
        return token[:-2]
    if len(token) >= 4 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def normalize_tokens(tokens: Iterable[str], cfg: NormalizationConfig) -> list[str]:
    """Lowercase, drop stopwords, lemmatize; order preserved."""
    out = []
    for tok in tokens:
        low = tok.lower()
        if low in cfg.stopwords:
            continue
        out.append(lemmatize(low, cfg))
    return out


@dataclass(frozen=True)
class Concept:
    """A normalized word or phrase surface with the syntactic kinds it was seen as."""

    surface: str
    kinds: frozenset[ConceptKind]

    def __post_init__(self):
        if not self.kinds:
            raise ValueError(f"concept {self.surface!r} has no kinds")
        if not self.surface or self.surface != " ".join(self.surface.split()):
            raise ValueError(f"malformed concept surface {self.surface!r}")
        if self.surface != self.surface.lower():
            raise ValueError(f"concept surface must be lowercase: {self.surface!r}")
        n_tokens = len(self.surface.split())
        if self.kinds <= WORD_KINDS:
            if n_tokens != 1:
                raise ValueError(f"word concept must be a single token: {self.surface!r}")
        else:
            if n_tokens < 2 or self.kinds & WORD_KINDS:
                raise ValueError(
                    f"phrase concept needs >=2 tokens and phrase kinds only: {self.surface!r}"
                )

    @property
    def is_phrase(self) -> bool:
        return not (self.kinds <= WORD_KINDS)


def _emit_concepts(
    tree: Union[ParseTree, Node], cfg: NormalizationConfig
) -> Iterator[tuple[str, ConceptKind]]:
    """Raw (surface, kind) emissions, one per qualifying node, duplicates kept."""
    for node in walk_nodes(tree):
        if node.is_leaf:
            low = node.token.lower()
            if node.label.startswith("NN"):
                if low in cfg.stopwords:
                    continue
                lemma = lemmatize(low, cfg)
                if lemma:
                    yield lemma, ConceptKind.NOUN
            elif node.label.startswith("VB"):
                lemma = lemmatize(low, cfg)
                if low in cfg.auxiliary_verbs or lemma in cfg.auxiliary_verbs:
                    continue
                if lemma:
                    yield lemma, ConceptKind.VERB
            continue
        kind = PHRASE_LABELS.get(node.label)
        if kind is None:
            continue
        toks = normalize_tokens(yield_tokens(node), cfg)
        if cfg.min_phrase_tokens <= len(toks) <= cfg.max_phrase_tokens:
            yield " ".join(toks), kind


def extract_concepts(
    tree: Union[ParseTree, Node], cfg: NormalizationConfig = NormalizationConfig()
) -> list[Concept]:
    """Concepts of one sentence, deduplicated by surface with kinds merged."""
    kinds_by_surface: dict[str, set[ConceptKind]] = {}
    order: list[str] = []
    for surface, kind in _emit_concepts(tree, cfg):
        if surface not in kinds_by_surface:
            kinds_by_surface[surface] = set()
            order.append(surface)
        kinds_by_surface[surface].add(kind)
    return [Concept(s, frozenset(kinds_by_surface[s])) for s in order]


def extract_concept_counts(
    tree: Union[ParseTree, Node], cfg: NormalizationConfig = NormalizationConfig()
) -> dict[str, tuple[int, frozenset[ConceptKind]]]:
    """Per-sentence emission multiplicities: surface -> (count, kinds)."""
    counts: dict[str, int] = {}
    kinds: dict[str, set[ConceptKind]] = {}
    for surface, kind in _emit_concepts(tree, cfg):
        counts[surface] = counts.get(surface, 0) + 1
        kinds.setdefault(surface, set()).add(kind)
    return {s: (counts[s], frozenset(kinds[s])) for s in counts}


@dataclass
class ConceptCounts:
    """Corpus-level concept frequencies; mergeable across parallel shards."""

    frequencies: dict[str, int] = field(default_factory=dict)
    kinds: dict[str, set[ConceptKind]] = field(default_factory=dict)

    def add_sentence(self, concepts: Iterable[Concept]) -> None:
        """Count each distinct surface once for this sentence."""
        for concept in concepts:
            self.frequencies[concept.surface] = (
                self.frequencies.get(concept.surface, 0) + 1
            )
            self.kinds.setdefault(concept.surface, set()).update(concept.kinds)

    def merge(self, other: "ConceptCounts") -> "ConceptCounts":
        """Fold another partial count into this one (additive / kind-union)."""
        for surface, freq in other.frequencies.items():
            self.frequencies[surface] = self.frequencies.get(surface, 0) + freq
            self.kinds.setdefault(surface, set()).update(other.kinds[surface])
        return self


def count_concepts(
    corpus: Iterable[Union[ParseTree, Node]],
    cfg: NormalizationConfig = NormalizationConfig(),
) -> ConceptCounts:
    """Sentence-frequency counts over a stream of parse trees."""
    counts = ConceptCounts()
    for tree in corpus:
        counts.add_sentence(extract_concepts(tree, cfg))
    return counts


@dataclass(frozen=True)
class BankEntry:
    concept: Concept
    frequency: int
    id: int


@dataclass(frozen=True)
class ConceptBank:
    """Immutable id-indexed concept vocabulary.

    Entries are ordered by (frequency desc, surface asc) and ids follow
    that order with no gaps.
    """

    entries: tuple[BankEntry, ...]
    min_freq: int

    def __post_init__(self):
        index = {}
        for i, entry in enumerate(self.entries):
            if entry.id != i:
                raise ValueError(f"bank ids must be dense 0..n-1, got {entry.id} at {i}")
            if entry.frequency < self.min_freq:
                raise ValueError(
                    f"entry {entry.concept.surface!r} below min_freq {self.min_freq}"
                )
            if entry.concept.surface in index:
                raise ValueError(f"duplicate surface {entry.concept.surface!r}")
            index[entry.concept.surface] = entry.id
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id_of(self, surface: str) -> Union[int, None]:
        return self._index.get(surface)

    def entry_of(self, id: int) -> BankEntry:
        return self.entries[id]


def build_bank(counts: ConceptCounts, min_freq: int = 20) -> ConceptBank:
    """Keep concepts with frequency >= min_freq and assign dense ids."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    survivors = [
        (surface, freq)
        for surface, freq in counts.frequencies.items()
        if freq >= min_freq
    ]
    survivors.sort(key=lambda item: (-item[1], item[0]))
    entries = tuple(
        BankEntry(
            concept=Concept(surface, frozenset(counts.kinds[surface])),
            frequency=freq,
            id=i,
        )
        for i, (surface, freq) in enumerate(survivors)
    )
    return ConceptBank(entries=entries, min_freq=min_freq)


@dataclass(frozen=True)
class BankStats:
    """Bank summary: phrase share and phrase-frequency histogram.

    Bands are [min_freq, 50], (50, 100] and (100, inf) over phrase
    entries only; fractions sum to 1 unless `has_phrases` is False.
    """

    n: int
    phrase_count: int
    band_counts: tuple[int, int, int]
    band_fractions: tuple[float, float, float]
    has_phrases: bool


def bank_stats(bank: ConceptBank) -> BankStats:
    bands = [0, 0, 0]
    phrase_count = 0
    for entry in bank.entries:
        if not entry.concept.is_phrase:
            continue
        phrase_count += 1
        if entry.frequency <= 50:
            bands[0] += 1
        elif entry.frequency <= 100:
            bands[1] += 1
        else:
            bands[2] += 1
    if phrase_count:
        fractions = tuple(b / phrase_count for b in bands)
    else:
        fractions = (0.0, 0.0, 0.0)
    return BankStats(
        n=bank.n,
        phrase_count=phrase_count,
        band_counts=tuple(bands),
        band_fractions=fractions,
        has_phrases=phrase_count > 0,
    )


_BANK_HEADER_PREFIX = "#avs-bank v1"


def bank_to_tsv(bank: ConceptBank) -> str:
    """Render the TSV bank format: header line then id/surface/frequency/kinds."""
    lines = [f"{_BANK_HEADER_PREFIX} min_freq={bank.min_freq} n={bank.n}"]
    for entry in bank.entries:
        kinds = ",".join(sorted(k.value for k in entry.concept.kinds))
        lines.append(f"{entry.id}\t{entry.concept.surface}\t{entry.frequency}\t{kinds}")
    return "\n".join(lines) + "\n"


def save_bank(bank: ConceptBank, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(bank_to_tsv(bank))


def load_bank(path: str) -> ConceptBank:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_bank(fh.read(), name=path)


def parse_bank(text: str, name: str = "<bank>") -> ConceptBank:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_BANK_HEADER_PREFIX):
        raise ValueError(f"{name}:1: missing '{_BANK_HEADER_PREFIX}' header")
    try:
        header_fields = dict(
            part.split("=", 1) for part in lines[0][len(_BANK_HEADER_PREFIX):].split()
        )
        min_freq = int(header_fields["min_freq"])
        declared_n = int(header_fields["n"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{name}:1: bad header fields: {exc}") from exc
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{name}:{lineno}: expected 4 tab-separated fields")
        id_str, surface, freq_str, kinds_str = parts
        try:
            kinds = frozenset(ConceptKind(k) for k in kinds_str.split(",") if k)
            entries.append(
                BankEntry(
                    concept=Concept(surface, kinds),
                    frequency=int(freq_str),
                    id=int(id_str),
                )
            )
        except ValueError as exc:
            raise ValueError(f"{name}:{lineno}: {exc}") from exc
    if len(entries) != declared_n:
        raise ValueError(
            f"{name}: header declares n={declared_n} but found {len(entries)} entries"
        )
    return ConceptBank(entries=tuple(entries), min_freq=min_freq)
