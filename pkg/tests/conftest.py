import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zeroshot_st.data import gen_parallel_corpus, vocab_for_corpus
from zeroshot_st.model import Seq2SeqModel, micro_config

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    return gen_parallel_corpus(seed=3, size=60, lexicon_size=10, length_range=(1, 3))


@pytest.fixture(scope="session")
def small_vocab(small_corpus):
    return vocab_for_corpus(small_corpus)


@pytest.fixture
def micro_model(small_vocab):
    cfg = micro_config(len(small_vocab), dropout=0.0, attn_dropout=0.0, word_dropout=0.0,
                       emb_dropout=0.0)
    return Seq2SeqModel(cfg, small_vocab, seed=5)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(verdicts, key=lambda k: (int(str(k).rstrip("ab")), str(k)))
    for key in order:
        terminalreporter.write_line(verdicts[key])
