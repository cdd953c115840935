import copy
import math

import numpy as np
import pytest

from zeroshot_st.data import ASR, MT, assemble_training_set
from zeroshot_st.data.datasets import make_dataset
from zeroshot_st.errors import (
    ArgumentError,
    FormatError,
    IntegrityError,
    VersionError,
)
from zeroshot_st.model import Seq2SeqModel, micro_config
from zeroshot_st.training import (
    Checkpoint,
    EarlyStopper,
    TrainRun,
    evaluate_loss,
    finetune,
    load_checkpoint,
    save_checkpoint,
    train,
)


def test_early_stopper_keeps_best_epoch():
    stopper = EarlyStopper(patience=1)
    results = [stopper.update(e, loss, e) for e, loss in enumerate([2.0, 1.5, 1.6], start=1)]
    assert results == [False, False, True]
    assert stopper.best_epoch == 2 and stopper.best_payload == 2


def test_early_stopper_without_patience_never_stops():
    stopper = EarlyStopper(patience=None)
    assert not any(stopper.update(e, 10.0 + e) for e in range(20))
    assert stopper.best_epoch == 0


@pytest.fixture(scope="module")
def tiny_run(small_corpus, small_vocab):
    cfg = micro_config(len(small_vocab), d_model=8, d_inner=16, audio_layers=2, text_layers=1,
                       decoder_layers=1)
    pairs = small_corpus.train[:12]
    train_sets = assemble_training_set(pairs, "plain", small_vocab)
    valid = [make_dataset(small_corpus.valid[:6], d, small_vocab) for d in (ASR, MT)]

    def make(**kw):
        opts = dict(seed=11, max_epochs=2, batch_size=4, warmup=10)
        opts.update(kw)
        return TrainRun(cfg, small_vocab, train_sets, valid, **opts)
    return make


def test_training_is_deterministic(tiny_run):
    a, log_a = train(tiny_run())
    b, log_b = train(tiny_run())
    for k in a.state:
        np.testing.assert_array_equal(a.state[k], b.state[k])
    strip = [{k: v for k, v in r.items() if k != "wall_time"} for r in log_a]
    assert strip == [{k: v for k, v in r.items() if k != "wall_time"} for r in log_b]


def test_training_log_records(tiny_run):
    ckpt, log = train(tiny_run())
    assert {r["split"] for r in log} == {"train", "valid"}
    zero = [r for r in log if r["epoch"] == 0]
    assert {r["task"] for r in zero} == {ASR.label, MT.label}
    assert ckpt.epoch in (1, 2) and ckpt.meta["epochs_run"] == 2
    assert all(math.isfinite(r["loss"]) for r in log)


def test_recorded_valid_loss_matches_fresh_evaluation(tiny_run):
    run = tiny_run()
    ckpt, _ = train(run)
    loss, _ = evaluate_loss(ckpt.to_model(), run.valid)
    assert loss == pytest.approx(ckpt.valid_loss, rel=1e-12)


def test_training_does_not_mutate_datasets(tiny_run):
    run = tiny_run(max_epochs=1)
    before = copy.deepcopy([[s.output_ids.tolist() for s in ds] for ds in run.datasets])
    train(run)
    assert before == [[s.output_ids.tolist() for s in ds] for ds in run.datasets]


def test_max_steps_caps_updates(tiny_run):
    ckpt, _ = train(tiny_run(max_steps=3, max_epochs=10))
    assert ckpt.meta["steps"] == 3


def test_training_rejects_empty_data(tiny_run):
    run = tiny_run()
    run.datasets = [make_dataset([], ASR, run.vocab)]
    with pytest.raises(ArgumentError):
        train(run)


def test_finetune_starts_from_checkpoint(tiny_run):
    run = tiny_run(max_epochs=1)
    ckpt, _ = train(run)
    tuned, _ = finetune(ckpt, run.datasets[1:], run.valid, max_epochs=2, batch_size=4, warmup=10)
    assert tuned.epoch >= 1
    with pytest.raises(ArgumentError):
        finetune(ckpt, [], run.valid)


# ------------------------------------------------------------- checkpoints


@pytest.fixture
def saved(tmp_path, micro_model):
    micro_model.params.round_to_float32()
    path = tmp_path / "m.zsxl"
    save_checkpoint(Checkpoint.from_model(micro_model, epoch=3, valid_loss=1.25), path)
    return path, micro_model


def test_checkpoint_round_trip_is_exact(saved):
    path, model = saved
    ckpt = load_checkpoint(path)
    assert ckpt.epoch == 3 and ckpt.valid_loss == 1.25
    assert ckpt.config == model.config and ckpt.vocab.tokens == model.vocab.tokens
    for k, p in model.params.items():
        np.testing.assert_array_equal(ckpt.state[k], p.data)


def test_checkpoint_keeps_optimizer_state(tmp_path, micro_model):
    from zeroshot_st.core.optim import AdamState
    opt = AdamState(16, 1.0, 10, step=7)
    opt.first = {"out.bias": np.full(len(micro_model.vocab), 0.5)}
    opt.second = {"out.bias": np.full(len(micro_model.vocab), 0.25)}
    path = tmp_path / "o.zsxl"
    save_checkpoint(Checkpoint.from_model(micro_model, optimizer=opt), path)
    back = load_checkpoint(path).optimizer
    assert back.step == 7
    np.testing.assert_array_equal(back.second["out.bias"], opt.second["out.bias"])


def _corrupt(path, offset, data):
    raw = bytearray(path.read_bytes())
    raw[offset:offset + len(data)] = data
    path.write_bytes(bytes(raw))


def test_bad_magic(saved):
    path, _ = saved
    _corrupt(path, 0, b"NOPE")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_bad_version(saved):
    path, _ = saved
    _corrupt(path, 4, (99).to_bytes(4, "little"))
    with pytest.raises(VersionError):
        load_checkpoint(path)


@pytest.mark.parametrize("keep", [6, 40, -4])
def test_truncation(saved, keep):
    path, _ = saved
    raw = path.read_bytes()
    path.write_bytes(raw[:keep] if keep > 0 else raw[:keep])
    with pytest.raises(IntegrityError):
        load_checkpoint(path)


def test_loaded_model_predicts_like_the_original(saved, small_vocab):
    path, model = saved
    restored = load_checkpoint(path).to_model()
    ids = small_vocab.encode("ab")
    np.testing.assert_array_equal(
        model.encode_text(ids, "SRC").states.data, restored.encode_text(ids, "SRC").states.data)
    assert isinstance(restored, Seq2SeqModel)
