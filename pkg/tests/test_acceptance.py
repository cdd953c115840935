"""End-to-end acceptance checks, one test per criterion.

Every test records a one-line verdict with its measured values; conftest
prints the collected lines at the end of the session. The preset runs share
one session-scoped cache, so the trained models are built once.
"""
import filecmp
import json
import math

import numpy as np
import pytest

from zeroshot_st.cli.presets import resolve_preset
from zeroshot_st.cli.runconfig import RunConfig
from zeroshot_st.cli.runner import run_preset
from zeroshot_st.core import tensor as T
from zeroshot_st.core.gradcheck import check_gradients
from zeroshot_st.core.optim import AdamState, adam_step, clip_grad_norm
from zeroshot_st.core.tensor import Tensor, no_grad
from zeroshot_st.data import (
    ASR,
    MT,
    Dataset,
    collate,
    gen_parallel_corpus,
    schedule_batches,
    vocab_for_corpus,
)
from zeroshot_st.data.datasets import make_dataset
from zeroshot_st.evaluation import bleu, bleu_statistics, decode_samples, wer
from zeroshot_st.analysis import svcca
from zeroshot_st.model import Seq2SeqModel, forward_loss, micro_config
from zeroshot_st.training import Checkpoint, load_checkpoint, save_checkpoint

VERDICTS = {}


def verdict(number, title, ok, detail):
    VERDICTS[number] = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
    assert ok, VERDICTS[number]


# ------------------------------------------------------------ shared runs


class Runs:
    """Lazily trained presets at the desk configuration, keyed by name."""

    def __init__(self, root):
        self.root = root
        self.cfg = RunConfig()
        self.cache = {}

    def get(self, name, **kw):
        if name not in self.cache:
            self.cache[name] = self._run(name, **kw)
        return self.cache[name]

    def _run(self, name, cfg=None, init_from=None, data_portion=1.0):
        preset = resolve_preset(name, data_portion=data_portion)
        out = self.root / name.replace("(", "_").replace(")", "")
        report, analysis, ckpt = run_preset(preset, cfg or self.cfg, out, init_from=init_from)
        return {"metrics": report.as_dict(), "analysis": analysis, "ckpt": ckpt, "dir": out}


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    return Runs(tmp_path_factory.mktemp("acceptance"))


def plain(runs):
    return runs.get("plain-zs")


# ---------------------------------------------------------- 1. gradients

OPS = {
    "add": lambda a, b: T.add(a, T.getitem(b, 0)),
    "sub": lambda a, b: T.sub(T.getitem(b, 1), a),
    "mul": lambda a, b: T.mul(a, T.getitem(b, 2)),
    "div": lambda a, b: T.div(a, T.add(T.mul(T.getitem(b, 3), T.getitem(b, 3)), 1.0)),
    "matmul": lambda a, b: T.matmul(a, T.transpose(b)),
    "concat": lambda a, b: T.concat([a, b], axis=0),
    "neg": lambda a, b: T.neg(a),
    "exp": lambda a, b: T.exp(a),
    "log": lambda a, b: T.log(T.add(T.mul(a, a), 1.0)),
    "relu": lambda a, b: T.relu(T.add(a, 0.05)),
    "softmax": lambda a, b: T.softmax(a),
    "log_softmax": lambda a, b: T.log_softmax(a),
    "layer_norm": lambda a, b: T.layer_norm(a, T.getitem(b, 0), T.getitem(b, 1)),
    "reshape": lambda a, b: T.reshape(a, (-1,)),
    "transpose": lambda a, b: T.transpose(a),
    "swapaxes": lambda a, b: T.swapaxes(a, 0, 1),
    "broadcast_to": lambda a, b: T.broadcast_to(a, (2, 3, 4)),
    "getitem": lambda a, b: T.getitem(a, (slice(None), slice(1, 3))),
    "tsum": lambda a, b: T.tsum(a, axis=1),
    "mean": lambda a, b: T.mean(a, axis=0, keepdims=True),
    "masked_fill": lambda a, b: T.masked_fill(a, np.eye(3, 4, dtype=bool), 0.0),
    "linear": lambda a, b: T.linear(a, T.transpose(b), T.getitem(b, 0)),
    "dropout": lambda a, b: T.dropout(a, 0.3, np.random.default_rng(1)),
    "token_dropout": lambda a, b: T.token_dropout(a, 0.3, np.random.default_rng(2)),
    "split_merge_heads": lambda a, b: T.merge_heads(T.mul(T.split_heads(
        T.reshape(a, (1, 3, 4)), 2), 1.3)),
    "attention": lambda a, b: T.attention(
        T.reshape(a, (1, 1, 3, 4)), T.reshape(b, (1, 1, 4, 4)), T.reshape(b, (1, 1, 4, 4)),
        np.array([[[[False, False, True, False]]]]), 0.2, np.random.default_rng(3), True),
}


def _sampled_model_error(model, batch, rng, per_tensor=12, h=1e-5):
    """Worst relative error over sampled coordinates of every parameter tensor."""
    model.params.zero_grad()
    loss = forward_loss(model, batch)[0]
    loss.backward()
    worst = 0.0
    for name, p in model.params.items():
        analytic = p.grad.reshape(-1)
        flat = p.data.reshape(-1)
        idx = rng.choice(flat.size, size=min(per_tensor, flat.size), replace=False)
        numeric = np.empty(len(idx))
        with no_grad():
            for j, i in enumerate(idx):
                orig = flat[i]
                flat[i] = orig + h
                plus = forward_loss(model, batch)[0].item()
                flat[i] = orig - h
                minus = forward_loss(model, batch)[0].item()
                flat[i] = orig
                numeric[j] = (plus - minus) / (2 * h)
        scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
        worst = max(worst, float(np.abs(analytic[idx] - numeric).max() / scale))
    return worst


def test_01_gradient_suite():
    rng = np.random.default_rng(0)
    op_errors = {}
    for name, op in OPS.items():
        a = Tensor(rng.normal(size=(3, 4)), True)
        b = Tensor(rng.normal(size=(4, 4)), True)
        w = rng.normal(size=op(a, b).shape)
        op_errors[name] = check_gradients(lambda: T.tsum(T.mul(op(a, b), w)), [a, b])
    logits = Tensor(rng.normal(size=(2, 3, 6)), True)
    targets = np.array([[1, 2, 0], [4, 5, 3]])
    op_errors["cross_entropy"] = check_gradients(
        lambda: T.cross_entropy_label_smoothed(logits, targets, 0.1, pad_id=0), [logits])
    table = T.Tensor(rng.normal(size=(6, 3)), True)
    op_errors["embedding"] = check_gradients(
        lambda: T.tsum(T.mul(T.embedding(table, np.array([[1, 1, 4]])), 1.7)), [table])

    corpus = gen_parallel_corpus(seed=3, size=40, lexicon_size=8, length_range=(1, 2))
    vocab = vocab_for_corpus(corpus)
    cfg = micro_config(len(vocab), dropout=0.0, attn_dropout=0.0, word_dropout=0.0,
                       emb_dropout=0.0, aux_weight=0.5)
    model = Seq2SeqModel(cfg, vocab, seed=1)
    model_error = max(
        _sampled_model_error(model, collate(make_dataset(corpus.train[:2], d, vocab).samples,
                                            vocab), rng)
        for d in (ASR, MT))
    worst_op = max(op_errors, key=op_errors.get)
    ok = op_errors[worst_op] < 1e-4 and model_error < 1e-4
    verdict(1, "gradient suite", ok,
            f"{len(op_errors)} ops, worst {worst_op} {op_errors[worst_op]:.1e}; micro-model "
            f"{model_error:.1e} (< 1e-4)")


# ------------------------------------------------------------ 2. overfit


def test_02_overfit_oracle():
    corpus = gen_parallel_corpus(seed=1, size=100, lexicon_size=16, length_range=(2, 3))
    vocab = vocab_for_corpus(corpus)
    cfg = micro_config(len(vocab), dropout=0.0, attn_dropout=0.0, word_dropout=0.0,
                       emb_dropout=0.0, label_smoothing=0.0)
    model = Seq2SeqModel(cfg, vocab, seed=0)
    ds = make_dataset(corpus.train[:64], MT, vocab)
    batch = collate(ds.samples, vocab)
    opt = AdamState(cfg.d_model, 2.0, 100)
    first_below = None
    for step in range(1, 501):
        model.params.zero_grad()
        total, ce, _ = forward_loss(model, batch)
        if first_below is None and ce.item() < 0.1:
            first_below = step - 1
        total.backward()
        clip_grad_norm(model.params, 1.0)
        adam_step(model.params, opt)
    with no_grad():
        final = forward_loss(model, batch)[1].item()
    hyps = decode_samples(model, ds.samples)
    exact = 100.0 * np.mean([h == s.output_text for h, s in zip(hyps, ds.samples)])
    ok = first_below is not None and final < 0.1 and exact >= 95.0
    verdict(2, "overfit oracle", ok,
            f"CE < 0.1 after {first_below} steps, final CE {final:.1e}, exact decode {exact:.1f}%")


# ------------------------------------------------------------ 3. metrics


def test_03_metric_oracles():
    wer_cases = [(["a b c"], ["a x c"], 100 / 3), (["a"], ["x y z"], 300.0),
                 (["Hello, world."], ["hello world"], 0.0), (["a b c d"], ["a c d"], 25.0)]
    wer_ok = all(wer(r, h) == pytest.approx(v, abs=1e-12) for r, h, v in wer_cases)

    def oracle(ref, hyp):
        m, t, c, r = bleu_statistics([ref], [hyp])
        p = [(mi + 1) / (ti + 1) if n > 0 and mi == 0 else mi / ti
             for n, (mi, ti) in enumerate(zip(m, t))]
        bp = 1.0 if c >= r else math.exp(1 - r / c)
        return 100 * bp * math.exp(sum(map(math.log, p)) / 4)

    bleu_cases = [("the cat is on the mat", "the cat the mat is on"),
                  ("a b c d e f g h", "a b c d"),
                  ("Wola bemi nesu.", "Wola bemi."),
                  ("x y z w v", "x y z w v")]
    diffs = [abs(bleu([r], [h]) - oracle(r, h)) for r, h in bleu_cases]
    known = abs(bleu(["a b c d e f g h"], ["a b c d"]) - 36.79) < 0.01
    ok = wer_ok and max(diffs) < 0.01 and known
    verdict(3, "metric oracles", ok,
            f"{len(wer_cases)} WER fixtures exact, BLEU max |diff| {max(diffs):.1e}")


# ------------------------------------------------------- 4. wrong language


@pytest.mark.slow
def test_04_wrong_language_output(runs):
    m = plain(runs)["metrics"]
    tgt = m["ST/tgt-only%"]
    verdict(4, "zero-shot output language", tgt < 5.0,
            f"plain-zs TGT-only {tgt:.2f}% (< 5%), SRC-only {m['ST/src-only%']:.2f}%")


# -------------------------------------------------------- 5. augmentation


@pytest.mark.slow
def test_05_augmentation_raises_target_tokens(runs):
    base = plain(runs)
    steps = base["ckpt"].meta["steps"]
    aug = runs.get("augment-c", cfg=runs.cfg.replace(max_steps=steps))
    a, p = aug["metrics"]["ST/tgt-only%"], base["metrics"]["ST/tgt-only%"]
    verdict(5, "augmentation direction", a > p,
            f"augment-c TGT-only {a:.2f}% vs plain-zs {p:.2f}% at {steps} steps each")


# ------------------------------------------------------- 6. auxiliary loss


@pytest.mark.slow
def test_06a_aux_loss_shrinks_pooled_distance(runs):
    aux, base = runs.get("aux(5.0)")["analysis"], plain(runs)["analysis"]
    ratio = aux.pooled_sq_error / base.pooled_sq_error
    verdict("6a", "aux loss pooled distance", ratio <= 0.5,
            f"squared error {aux.pooled_sq_error:.4f} vs {base.pooled_sq_error:.4f} "
            f"(ratio {ratio:.3f} <= 0.5)")


@pytest.mark.slow
def test_06b_aux_loss_raises_svcca(runs):
    aux, base = runs.get("aux(5.0)")["analysis"], plain(runs)["analysis"]
    verdict("6b", "aux loss SVCCA", aux.svcca > base.svcca,
            f"text-audio SVCCA aux(5.0) {aux.svcca:.3f} vs plain-zs {base.svcca:.3f}")


# ------------------------------------------------------------ 7. few-shot


def _finetune(runs, name):
    ckpt_path = plain(runs)["dir"] / "checkpoint.zsxl"
    return runs.get(name, init_from=str(ckpt_path))


@pytest.mark.slow
def test_07_few_shot_beats_scratch(runs):
    scratch = runs.get("single-st", data_portion=0.1)["metrics"]["ST/BLEU"]
    tuned = _finetune(runs, "ft-st")["metrics"]["ST/BLEU"]
    verdict(7, "few-shot direction", tuned > scratch,
            f"ft-st BLEU {tuned:.2f} vs single-st on the same 10% {scratch:.2f}")


# ---------------------------------------------------------- 8. forgetting


@pytest.mark.slow
def test_08_forgetting(runs):
    before = plain(runs)["metrics"]["ASR/WER"]
    st_only = _finetune(runs, "ft-st")["metrics"]["ASR/WER"]
    mixed = _finetune(runs, "ft-mix")["metrics"]["ASR/WER"]
    ok = st_only > before and (mixed - before) < (st_only - before)
    verdict(8, "forgetting direction", ok,
            f"ASR WER {before:.1f} -> ft-st {st_only:.1f}, ft-mix {mixed:.1f}")


# ------------------------------------------------------------- 9. SVCCA


def test_09_svcca_properties():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(2000, 8))
    self_err = abs(svcca(x, x) - 1.0)
    inv_err = 0.0
    for _ in range(10):
        a = rng.normal(size=(8, 8))
        inv_err = max(inv_err, abs(svcca(x, x @ a) - svcca(x, x)))
    noise = svcca(rng.normal(size=(2000, 8)), rng.normal(size=(2000, 8)))
    ok = self_err <= 1e-6 and inv_err <= 1e-3 and noise < 0.2
    verdict(9, "SVCCA properties", ok,
            f"|self - 1| {self_err:.1e}, invertible-map change {inv_err:.1e}, "
            f"independent {noise:.3f}")


# ------------------------------------------------------------- 10. probe


@pytest.mark.slow
def test_10_probe_direction(runs):
    base, aux = plain(runs)["analysis"], runs.get("aux(5.0)")["analysis"]
    ok = aux.tnr < base.tnr and base.tpr > 95 and base.tnr > 95
    verdict(10, "modality probe direction", ok,
            f"plain-zs TPR {base.tpr:.1f}% TNR {base.tnr:.1f}%; aux(5.0) TNR {aux.tnr:.1f}%")


# -------------------------------------------------------------- 11. DEPI


def _depi_ablation_ok():
    corpus = gen_parallel_corpus(seed=3, size=40, lexicon_size=8)
    vocab = vocab_for_corpus(corpus)
    cfg = micro_config(len(vocab), dropout=0.0, attn_dropout=0.0, word_dropout=0.0,
                       emb_dropout=0.0, depi=True)
    model = Seq2SeqModel(cfg, vocab, seed=2)
    # silence the attention of the residual-free layer: its input must no longer pass through
    layer = f"shared.layers.{cfg.depi_layer}"
    for suffix in ("o.w", "o.b"):
        model.params[f"{layer}.attn.{suffix}"].data[:] = 0.0
    x = Tensor(np.random.default_rng(0).normal(size=(2, 4, cfg.d_model)))
    blocked = np.zeros((2, 1, 1, 4), dtype=bool)
    out_a = model.encoder_layer(x, blocked, layer, keep_residual=False).data
    out_b = model.encoder_layer(T.mul(x, 3.0), blocked, layer, keep_residual=False).data
    kept = model.encoder_layer(x, blocked, layer).data
    return np.allclose(out_a, out_b) and not np.allclose(out_a, kept)


@pytest.mark.slow
def test_11_depi_learns_mt(runs):
    depi = runs.get("depi")
    log = [r for r in _train_log(depi["dir"]) if r["task"] == MT.label and r["split"] == "train"]
    initial = next(r["loss"] for r in log if r["epoch"] == 0)
    final = max(log, key=lambda r: r["epoch"])["loss"]
    drop = 100.0 * (1 - final / initial)
    ablation = _depi_ablation_ok()
    verdict(11, "DEPI config", drop >= 50 and ablation,
            f"MT train loss {initial:.3f} -> {final:.3f} ({drop:.1f}% drop, >= 50%); "
            f"residual ablation {'local' if ablation else 'NOT local'}")


def _train_log(run_dir):
    with open(run_dir / "train_log.jsonl", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


# ----------------------------------------------------------- 12. plumbing

TINY = RunConfig(corpus_size=120, lexicon_size=8, length_min=1, length_max=2, audio_layers=2,
                 text_layers=1, decoder_layers=1, d_model=16, d_inner=16, n_heads=2,
                 batch_size=16, max_epochs=2, warmup=20, eval_max_len=12)


def test_12_plumbing(tmp_path):
    # checkpoint round trip at 32-bit
    corpus = gen_parallel_corpus(seed=3, size=40, lexicon_size=8)
    vocab = vocab_for_corpus(corpus)
    model = Seq2SeqModel(micro_config(len(vocab)), vocab, seed=4)
    model.params.round_to_float32()
    save_checkpoint(Checkpoint.from_model(model), tmp_path / "m.zsxl")
    back = load_checkpoint(tmp_path / "m.zsxl")
    round_trip = all(np.array_equal(back.state[k], p.data) for k, p in model.params.items())

    # each dataset's batches are visited exactly once per epoch
    datasets = [Dataset(ASR, list(range(n))) for n in (37, 11, 64)]
    coverage = True
    for epoch in range(3):
        sched = schedule_batches(datasets, 8, [0, epoch])
        seen = [[] for _ in datasets]
        for d, b in sched:
            seen[d] += list(sched.batches[d][b])
        coverage &= all(sorted(s) == list(range(len(ds))) for s, ds in zip(seen, datasets))

    # same-seed reruns write identical metric files
    preset = resolve_preset("plain-zs", seed=7)
    for name in ("a", "b"):
        run_preset(preset, TINY, tmp_path / name, analyze=False)
    rerun = filecmp.cmp(tmp_path / "a" / "metrics.jsonl", tmp_path / "b" / "metrics.jsonl",
                        shallow=False)
    verdict(12, "plumbing", round_trip and coverage and rerun,
            f"checkpoint bit-identical {round_trip}, schedule coverage {coverage}, "
            f"rerun metrics identical {rerun}")


# ------------------------------------------------ supporting (not a criterion)


@pytest.mark.slow
def test_augmented_model_output_language_follows_tag(runs):
    from zeroshot_st.cli.runner import build_corpus, test_sets
    from zeroshot_st.data import Lang
    from zeroshot_st.data.datasets import ST
    from zeroshot_st.evaluation import token_language_stats
    steps = plain(runs)["ckpt"].meta["steps"]
    aug = runs.get("augment-c", cfg=runs.cfg.replace(max_steps=steps))
    model = aug["ckpt"].to_model()
    corpus = build_corpus(runs.cfg)
    samples = test_sets(corpus, model.vocab, runs.cfg)[ST][:20]
    lex = corpus.lexicon
    changed = 0
    for s in samples:
        langs = []
        for tag in (Lang.SRC, Lang.TGT):
            hyp = decode_samples(model, [s], tag, max_len=runs.cfg.eval_max_len)
            st = token_language_stats(hyp, lex.src_words, lex.tgt_words, lex.reversed_words)
            langs.append(max((st.src_only, "SRC"), (st.tgt_only, "TGT"))[1])
        changed += langs[0] != langs[1]
    assert changed >= 1
