"""Synthetic parallel corpus and the character-reversed artificial language."""
from __future__ import annotations

import enum
import math
import string
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError

TERMINALS = (".", "!", "?")
SRC_CONSONANTS = "bdlmnprstw"
TGT_CONSONANTS = "cfghjkvxyz"
VOWELS = "aeiou"


class Lang(str, enum.Enum):
    SRC = "SRC"
    TGT = "TGT"
    SRC_R = "SRC-R"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Sentence:
    text: str
    lang: Lang

    @property
    def words(self):
        return normalize_words(self.text)


def normalize_words(text):
    """Lowercased words with all punctuation stripped."""
    table = str.maketrans("", "", string.punctuation)
    return text.lower().translate(table).split()


def _capitalize(text):
    for i, ch in enumerate(text):
        if ch.isalpha():
            return text[:i] + ch.upper() + text[i + 1:]
    return text


def reverse_language(sentence):
    """Map a source sentence to the artificial reversed language.

    Characters are reversed, then lowercased with punctuation removed; finally
    the first letter is capitalized and the original terminal mark re-attached.

    >>> reverse_language("Hello world!")
    'Dlrow olleh!'
    """
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    if not text:
        out = ""
    else:
        stripped = text.rstrip()
        terminal = stripped[-1] if stripped and stripped[-1] in TERMINALS else ""
        core = " ".join(normalize_words(text[::-1]))
        out = _capitalize(core) + terminal if core else ""
    if isinstance(sentence, Sentence):
        return Sentence(out, Lang.SRC_R)
    return out


def _make_words(rng, consonants, count, taken):
    words = []
    attempts = 0
    while len(words) < count:
        attempts += 1
        if attempts > 1000 * count + 1000:
            raise ArgumentError(f"cannot draw {count} distinct words from this inventory")
        n_syll = int(rng.integers(2, 4))
        w = "".join(consonants[rng.integers(len(consonants))] + VOWELS[rng.integers(len(VOWELS))]
                    for _ in range(n_syll))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


@dataclass(frozen=True)
class Lexicon:
    """Seeded bijection between source words and target words."""

    mapping: dict

    @classmethod
    def generate(cls, size, seed, cognate_fraction=0.1):
        if size < 1:
            raise ArgumentError(f"lexicon size must be >= 1, got {size}")
        rng = np.random.default_rng([seed, 17])
        taken = set()
        src = _make_words(rng, SRC_CONSONANTS, size, taken)
        n_cognates = int(round(cognate_fraction * size))
        tgt = _make_words(rng, TGT_CONSONANTS, size - n_cognates, taken)
        order = rng.permutation(size)
        cognate_idx = set(order[:n_cognates].tolist())
        it = iter(tgt)
        mapping = {w: (w if i in cognate_idx else next(it)) for i, w in enumerate(src)}
        return cls(mapping)

    @property
    def src_words(self):
        return frozenset(self.mapping)

    @property
    def tgt_words(self):
        return frozenset(self.mapping.values())

    @property
    def reversed_words(self):
        return frozenset(w[::-1] for w in self.mapping)

    def translate(self, word):
        return self.mapping[word]


def translate_sentence(src_text, lexicon):
    """Cipher every word and reverse the word order; keep the terminal mark."""
    terminal = src_text[-1] if src_text and src_text[-1] in TERMINALS else ""
    words = [lexicon.translate(w) for w in normalize_words(src_text)]
    return _capitalize(" ".join(reversed(words))) + terminal


@dataclass
class ParallelCorpus:
    lexicon: Lexicon
    train: list = field(default_factory=list)
    valid: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def split(self, name):
        return {"train": self.train, "valid": self.valid, "test": self.test}[name]

    def portion(self, fraction):
        """The first ``ceil(fraction * len(train))`` training pairs."""
        if not 0 < fraction <= 1:
            raise ArgumentError(f"data portion must lie in (0, 1], got {fraction}")
        return self.train[: math.ceil(fraction * len(self.train))]

    @property
    def pairs(self):
        return self.train + self.valid + self.test


def gen_parallel_corpus(seed, size, lexicon_size, length_range=(2, 4), valid_fraction=0.1,
                        test_fraction=0.1, cognate_fraction=0.1):
    """Draw ``size`` distinct (SRC, TGT) sentence pairs and split them.

    Source sentences are random word sequences from the lexicon. The target is
    the word-by-word cipher in reversed order, so translation needs reordering.
    """
    if size < 1:
        raise ArgumentError(f"corpus size must be >= 1, got {size}")
    lo, hi = length_range
    if lo < 1 or hi < lo:
        raise ArgumentError(f"invalid sentence length range {length_range}")
    lexicon = Lexicon.generate(lexicon_size, seed, cognate_fraction)
    vocab = sorted(lexicon.mapping)
    rng = np.random.default_rng([seed, 29])
    seen, pairs = set(), []
    attempts = 0
    while len(pairs) < size:
        attempts += 1
        if attempts > 50 * size + 1000:
            raise ArgumentError(
                f"cannot draw {size} distinct sentences from a {lexicon_size}-word lexicon")
        n = int(rng.integers(lo, hi + 1))
        words = [vocab[i] for i in rng.integers(len(vocab), size=n)]
        terminal = TERMINALS[int(rng.integers(len(TERMINALS)))]
        src = _capitalize(" ".join(words)) + terminal
        if src in seen:
            continue
        seen.add(src)
        pairs.append((Sentence(src, Lang.SRC), Sentence(translate_sentence(src, lexicon), Lang.TGT)))
    n_test = int(round(test_fraction * size))
    n_valid = int(round(valid_fraction * size))
    n_train = size - n_test - n_valid
    return ParallelCorpus(lexicon, pairs[:n_train], pairs[n_train:n_train + n_valid],
                          pairs[n_train + n_valid:])
