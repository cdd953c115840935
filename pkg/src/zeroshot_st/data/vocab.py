"""Character-level vocabulary with reserved specials and language tags."""
from __future__ import annotations

import numpy as np

from .corpus import Lang

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
LANG_TAGS = {Lang.SRC: "<SRC>", Lang.TGT: "<TGT>", Lang.SRC_R: "<SRC-R>"}
# ids 0..6 are fixed: pad, bos, eos, unk, <SRC>, <TGT>, <SRC-R>
RESERVED = (PAD, BOS, EOS, UNK, *LANG_TAGS.values())


class Vocabulary:
    def __init__(self, chars):
        chars = sorted(set(chars) - set(RESERVED))
        self.tokens = list(RESERVED) + chars
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    @property
    def pad_id(self):
        return 0

    @property
    def bos_id(self):
        return 1

    @property
    def eos_id(self):
        return 2

    @property
    def unk_id(self):
        return 3

    @property
    def n_reserved(self):
        return len(RESERVED)

    def tag_id(self, lang):
        return self.index[LANG_TAGS[Lang(lang)]]

    @property
    def tag_ids(self):
        return {lang: self.index[tok] for lang, tok in LANG_TAGS.items()}

    def lang_of_tag(self, tag_id):
        for lang, idx in self.tag_ids.items():
            if idx == tag_id:
                return lang
        raise KeyError(tag_id)

    def encode(self, text):
        return np.array([self.index.get(ch, self.unk_id) for ch in text], dtype=np.int64)

    def decode(self, ids):
        """Inverse of :meth:`encode`; stops at the first ``<eos>`` and drops specials."""
        out = []
        for i in ids:
            i = int(i)
            if i == self.eos_id:
                break
            if i >= self.n_reserved:
                out.append(self.tokens[i])
            elif i == self.unk_id:
                out.append("?")
        return "".join(out)

    @classmethod
    def from_tokens(cls, tokens):
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise ValueError("token list does not start with the reserved specials")
        return cls(tokens[len(RESERVED):])


def build_vocab(corpora):
    """Collect every character of every text in ``corpora``.

    Elements may be strings, ``Sentence`` objects, or nested iterables of them.
    """
    chars = set()

    def visit(item):
        if isinstance(item, str):
            chars.update(item)
        elif hasattr(item, "text"):
            chars.update(item.text)
        else:
            for sub in item:
                visit(sub)

    visit(corpora)
    return Vocabulary(chars)
