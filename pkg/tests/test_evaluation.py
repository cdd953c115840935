import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeroshot_st.data import ASR, MT, Lang
from zeroshot_st.data.datasets import make_dataset
from zeroshot_st.errors import ArgumentError, CascadeError, FormatError
from zeroshot_st.evaluation import (
    MetricsReport,
    bleu,
    bleu_statistics,
    bleu_tokenize,
    cascade_translate,
    decode_inputs,
    decode_samples,
    edit_distance,
    evaluate_model,
    normalize_for_wer,
    token_language_stats,
    translate_texts,
    wer,
)
from zeroshot_st.evaluation.metrics import bleu_from_statistics
from zeroshot_st.model import Seq2SeqModel

# --------------------------------------------------------------------- WER


def test_wer_one_substitution_in_three():
    assert wer(["a b c"], ["a x c"]) == pytest.approx(100 / 3, abs=0.01)


def test_wer_can_exceed_one_hundred():
    assert wer(["a"], ["x y z"]) == pytest.approx(300.0)


def test_wer_ignores_case_and_punctuation():
    assert wer(["Hello, world."], ["hello world"]) == 0.0
    assert normalize_for_wer("It's well-known!") == ["it's", "well-known"]


def test_wer_errors():
    with pytest.raises(ArgumentError):
        wer(["a"], [])
    with pytest.raises(ArgumentError):
        wer([""], ["a"])


@given(st.lists(st.sampled_from("abc"), max_size=6), st.lists(st.sampled_from("abc"), max_size=6))
def test_edit_distance_is_a_symmetric_bounded_metric(a, b):
    d = edit_distance(a, b)
    assert d == edit_distance(b, a)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


# -------------------------------------------------------------------- BLEU


def test_bleu_perfect_match():
    assert bleu(["the cat sat on the mat ."], ["the cat sat on the mat ."]) == pytest.approx(100.0)


def test_bleu_brevity_penalty_only():
    # every n-gram matches but the hypothesis is half the reference length
    assert bleu(["a b c d e f g h"], ["a b c d"]) == pytest.approx(100 * math.exp(-1), abs=0.01)


def test_bleu_matches_formula():
    ref, hyp = "the cat is on the mat", "the cat the mat is on"
    matches, totals, c, r = bleu_statistics([ref], [hyp])
    assert matches == [6, 3, 0, 0] and totals == [6, 5, 4, 3]
    p = [6 / 6, 3 / 5, 1 / 5, 1 / 4]
    expected = 100 * math.exp(sum(math.log(x) for x in p) / 4)
    assert bleu([ref], [hyp]) == pytest.approx(expected, rel=1e-12)
    assert (c, r) == (6, 6)


def test_bleu_zero_cases():
    assert bleu(["a b"], [""]) == 0.0
    assert bleu(["a b"], ["x y"]) == 0.0
    assert bleu_from_statistics([0, 0, 0, 0], [0, 0, 0, 0], 0, 5) == 0.0


def test_bleu_tokenization_splits_punctuation_and_keeps_case():
    assert bleu_tokenize("Wola, bemi.") == ["Wola", ",", "bemi", "."]
    assert bleu(["Wola bemi"], ["wola bemi"]) < 100


sentences = st.lists(st.text(alphabet="abc ", min_size=1, max_size=12), min_size=1, max_size=6)


@given(sentences, st.randoms())
def test_corpus_bleu_is_permutation_invariant(refs, rnd):
    hyps = [r[::-1] for r in refs]
    order = list(range(len(refs)))
    rnd.shuffle(order)
    a = bleu(refs, hyps)
    b = bleu([refs[i] for i in order], [hyps[i] for i in order])
    assert a == pytest.approx(b, abs=1e-9)
    assert 0.0 <= a <= 100.0


# ------------------------------------------------------- token-language stats


def test_token_language_stats_thirds():
    stats = token_language_stats(["wola kexi nami"], {"wola", "nami"}, {"kexi", "nami"})
    assert stats.both == pytest.approx(100 / 3)
    assert stats.src_only == pytest.approx(100 / 3)
    assert stats.tgt_only == pytest.approx(100 / 3)
    assert stats.count == 3 and stats.unclassified == pytest.approx(0.0)


def test_token_language_stats_exclusion_and_empty():
    stats = token_language_stats(["alow kexi zzz"], {"wola"}, {"kexi"}, excluded={"alow"})
    assert stats.count == 2 and stats.tgt_only == 50.0
    assert stats.unclassified == pytest.approx(50.0)
    empty = token_language_stats([], {"a"}, {"b"})
    assert empty.count == 0 and empty.unclassified == 0.0


# ----------------------------------------------------------- reports


def test_metrics_report_round_trip(tmp_path):
    report = MetricsReport().add("ASR", "WER", 12.5, 70).add("ST", "BLEU", 3.25, 70)
    path = tmp_path / "m.jsonl"
    report.save(path)
    back = MetricsReport.load(path)
    assert back.as_dict() == {"ASR/WER": 12.5, "ST/BLEU": 3.25}
    assert back.entries == report.entries


def test_metrics_report_validation():
    with pytest.raises(ArgumentError):
        MetricsReport().add("ST", "BLEU", 101.0, 1)
    with pytest.raises(ArgumentError):
        MetricsReport().add("ST", "chrF", 1.0, 1)
    with pytest.raises(FormatError):
        MetricsReport.from_jsonl('{"task": "ASR"}\n')


# ------------------------------------------------------------- decoding


def test_decode_samples_uses_tag_override(micro_model, small_corpus, small_vocab):
    samples = make_dataset(small_corpus.test[:3], ASR, small_vocab).samples
    own = decode_samples(micro_model, samples, max_len=6)
    frames = [s.frames for s in samples]
    assert own == decode_inputs(micro_model, frames, Lang.SRC, max_len=6)
    assert decode_samples(micro_model, samples, "TGT", max_len=6) == \
        decode_inputs(micro_model, frames, Lang.TGT, max_len=6)
    assert decode_samples(micro_model, [], max_len=6) == []


def test_cascade_is_the_composition_of_both_models(micro_model, small_corpus, small_vocab):
    mt = Seq2SeqModel(micro_model.config, small_vocab, seed=99)
    frames = [s.frames for s in make_dataset(small_corpus.test[:3], ASR, small_vocab).samples]
    out, transcripts = cascade_translate(micro_model, mt, frames, max_len=6,
                                         return_transcripts=True)
    assert transcripts == decode_inputs(micro_model, frames, Lang.SRC, max_len=6)
    assert out == translate_texts(mt, transcripts, max_len=6)
    # perturbing the second stage changes the cascade output but not the transcripts
    mt.params["out.bias"].data[small_vocab.eos_id] += 50.0
    out2, transcripts2 = cascade_translate(micro_model, mt, frames, max_len=6,
                                           return_transcripts=True)
    assert transcripts2 == transcripts
    assert all(o == "" for o in out2)


def test_cascade_names_the_failing_stage(micro_model):
    with pytest.raises(CascadeError) as err:
        cascade_translate(micro_model, micro_model, [np.zeros((4, 3))])
    assert "asr" in str(err.value)


def test_evaluate_model_reports_every_task(micro_model, small_corpus, small_vocab):
    from zeroshot_st.data.datasets import ST
    tests = {d: make_dataset(small_corpus.test[:3], d, small_vocab).samples for d in (ASR, MT, ST)}
    report = evaluate_model(micro_model, tests, small_corpus.lexicon, max_len=6)
    keys = set(report.as_dict())
    assert {"ASR/WER", "MT/BLEU", "ST/BLEU", "ST/both%", "ST/src-only%", "ST/tgt-only%"} <= keys
