"""Word error rate, corpus BLEU, and output-language token statistics."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from ..errors import ArgumentError

_WER_STRIP = re.compile(r"[^\w\s'-]")
_BLEU_PUNCT = re.compile(r"([^\w\s'-])")


def normalize_for_wer(text):
    """Lowercase and drop punctuation, keeping apostrophes and hyphens."""
    return _WER_STRIP.sub("", text.lower()).split()


def edit_distance(ref, hyp):
    """Levenshtein distance between two token sequences (unit costs)."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h))
        prev = cur
    return prev[-1]


def _check_aligned(references, hypotheses):
    if len(references) != len(hypotheses):
        raise ArgumentError(
            f"{len(references)} references but {len(hypotheses)} hypotheses")


def wer(references, hypotheses):
    """Corpus WER in percent: total edits over total reference words.

    Can exceed 100 when hypotheses carry many insertions.
    """
    _check_aligned(references, hypotheses)
    edits = words = 0
    for ref, hyp in zip(references, hypotheses):
        r, h = normalize_for_wer(ref), normalize_for_wer(hyp)
        edits += edit_distance(r, h)
        words += len(r)
    if words == 0:
        raise ArgumentError("reference corpus has no words")
    return 100.0 * edits / words


def bleu_tokenize(text):
    """Whitespace tokens with punctuation marks split off; case is kept."""
    return _BLEU_PUNCT.sub(r" \1 ", text).split()


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_statistics(references, hypotheses, max_order=4):
    """Clipped matches and totals per order, plus hypothesis and reference lengths."""
    _check_aligned(references, hypotheses)
    matches, totals = [0] * max_order, [0] * max_order
    hyp_len = ref_len = 0
    for ref, hyp in zip(references, hypotheses):
        r, h = bleu_tokenize(ref), bleu_tokenize(hyp)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_order + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(len(h) - n + 1, 0)
    return matches, totals, hyp_len, ref_len


def bleu_from_statistics(matches, totals, hyp_len, ref_len):
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_p = 0.0
    for n, (m, t) in enumerate(zip(matches, totals), 1):
        # add-one smoothing for higher orders without any match
        p = (m + 1) / (t + 1) if (n >= 2 and m == 0) else m / t
        log_p += math.log(p)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p / len(matches))


def bleu(references, hypotheses):
    """Case-sensitive corpus BLEU-4 in [0, 100]."""
    return bleu_from_statistics(*bleu_statistics(references, hypotheses))


@dataclass(frozen=True)
class TokenLanguageStats:
    both: float
    src_only: float
    tgt_only: float
    count: int

    @property
    def unclassified(self):
        return 100.0 - self.both - self.src_only - self.tgt_only if self.count else 0.0


def token_language_stats(hypotheses, src_words, tgt_words, excluded=()):
    """Percentages of output words in both lexicons, only SRC, only TGT.

    Words in ``excluded`` but in neither lexicon (reversed-language words) are
    left out of the denominator; any other unknown word counts as unclassified.
    """
    src = {w.lower() for w in src_words}
    tgt = {w.lower() for w in tgt_words}
    skip = {w.lower() for w in excluded} - src - tgt
    counts = Counter()
    n = 0
    for hyp in hypotheses:
        for word in normalize_for_wer(hyp):
            if word in skip:
                continue
            n += 1
            in_src, in_tgt = word in src, word in tgt
            if in_src and in_tgt:
                counts["both"] += 1
            elif in_src:
                counts["src"] += 1
            elif in_tgt:
                counts["tgt"] += 1
    if n == 0:
        return TokenLanguageStats(0.0, 0.0, 0.0, 0)
    return TokenLanguageStats(100.0 * counts["both"] / n, 100.0 * counts["src"] / n,
                              100.0 * counts["tgt"] / n, n)
