"""Preset execution: build data, train or fine-tune, evaluate, analyze, record."""
from __future__ import annotations

import hashlib
import json
import logging
import os

from ..analysis.analyze import analyze_model
from ..data.corpus import gen_parallel_corpus
from ..data.datasets import ASR, MT, ST, assemble_training_set, make_dataset, vocab_for_corpus
from ..errors import ArgumentError
from ..evaluation.report import MetricsReport, evaluate_cascade, evaluate_model
from ..model.config import ModelConfig
from ..training.checkpoint import load_checkpoint, save_checkpoint
from ..training.trainer import TrainRun, finetune, train
from .presets import CASCADE, FINETUNE, resolve_preset

log = logging.getLogger(__name__)

CHECKPOINT = "checkpoint.zsxl"
METRICS = "metrics.jsonl"
TRAIN_LOG = "train_log.jsonl"
ANALYSIS = "analysis.json"
STATES = "states.zssd"
MANIFEST = "manifest.json"


def build_corpus(cfg):
    return gen_parallel_corpus(cfg.corpus_seed, cfg.corpus_size, cfg.lexicon_size,
                               (cfg.length_min, cfg.length_max),
                               cognate_fraction=cfg.cognate_fraction)


def corpus_digest(corpus):
    h = hashlib.sha256()
    for split in ("train", "valid", "test"):
        for src, tgt in corpus.split(split):
            h.update(f"{split}\t{src.text}\t{tgt.text}\n".encode())
    return h.hexdigest()


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def model_config(cfg, vocab, preset):
    return ModelConfig(vocab_size=len(vocab), audio_layers=cfg.audio_layers,
                       text_layers=cfg.text_layers, decoder_layers=cfg.decoder_layers,
                       d_model=cfg.d_model, d_inner=cfg.d_inner, n_heads=cfg.n_heads,
                       dropout=cfg.dropout, attn_dropout=cfg.attn_dropout,
                       word_dropout=cfg.word_dropout, emb_dropout=cfg.emb_dropout,
                       label_smoothing=cfg.label_smoothing, aux_weight=preset.aux_weight,
                       depi=preset.depi, feature_dim=cfg.feature_dim)


def _data_kw(cfg, seed):
    return dict(seed=seed, audio_seed=cfg.corpus_seed, noise_sigma=cfg.noise_sigma,
                feature_dim=cfg.feature_dim)


def test_sets(corpus, vocab, cfg):
    kw = dict(audio_seed=cfg.corpus_seed, noise_sigma=cfg.noise_sigma,
              feature_dim=cfg.feature_dim)
    return {d: make_dataset(corpus.test, d, vocab, **kw).samples for d in (ASR, MT, ST)}


def _train_run(cfg, model_cfg, vocab, train_pairs, valid_pairs, setting, seed, init_state=None,
               finetuning=False):
    kw = _data_kw(cfg, seed)
    datasets = assemble_training_set(train_pairs, setting, vocab, **kw)
    valid = assemble_training_set(valid_pairs, setting, vocab, **kw)
    if finetuning:
        epochs, patience = cfg.finetune_max_epochs, cfg.finetune_patience or None
    else:
        epochs, patience = cfg.max_epochs, cfg.patience or None
    return TrainRun(model_cfg, vocab, datasets, valid, seed=seed, max_epochs=epochs,
                    max_steps=None if finetuning or not cfg.max_steps else cfg.max_steps,
                    batch_size=cfg.batch_size, base_factor=cfg.base_factor, warmup=cfg.warmup,
                    patience=patience, init_state=init_state)


def train_preset(preset, cfg, corpus=None, init_from=None):
    """Train (or fine-tune) the model for one non-cascade preset.

    Returns ``(checkpoint, log_records)``.
    """
    corpus = corpus or build_corpus(cfg)
    vocab = vocab_for_corpus(corpus)
    init = None
    if init_from is not None:
        init = init_from if not isinstance(init_from, (str, os.PathLike)) else \
            load_checkpoint(init_from)
        if init.vocab != vocab:
            raise ArgumentError("--init-from checkpoint was trained on a different vocabulary")
    if preset.kind == FINETUNE:
        if init is None:
            raise ArgumentError(f"preset {preset.name!r} needs --init-from")
        pairs = corpus.portion(preset.st_portion)
        run = _train_run(cfg, init.config, vocab, pairs, corpus.valid, preset.setting,
                         preset.seed, finetuning=True)
        ckpt, records = finetune(init, run.datasets, run.valid, patience=run.patience,
                                 max_epochs=run.max_epochs, seed=preset.seed,
                                 batch_size=run.batch_size, base_factor=run.base_factor,
                                 warmup=run.warmup)
        return ckpt, records
    mcfg = model_config(cfg, vocab, preset)
    if init is not None and init.config.replace(aux_weight=0.0, depi=False) != \
            mcfg.replace(aux_weight=0.0, depi=False):
        raise ArgumentError("--init-from checkpoint has a different architecture")
    run = _train_run(cfg, mcfg, vocab, corpus.portion(preset.data_portion), corpus.valid,
                     preset.setting, preset.seed, init.state if init else None)
    return train(run)


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_preset(preset, cfg, out_dir, init_from=None, analyze=True):
    """Run one preset end to end and write its artifacts to ``out_dir``.

    Returns ``(MetricsReport, AnalysisReport or None, checkpoint)``; for the
    cascade preset the checkpoint is the ``(asr, mt)`` pair.
    """
    os.makedirs(out_dir, exist_ok=True)
    corpus = build_corpus(cfg)
    vocab = vocab_for_corpus(corpus)
    tests = test_sets(corpus, vocab, cfg)
    analysis = None
    if preset.kind == CASCADE:
        parts = {}
        records = []
        for task in ("asr", "mt"):
            sub = resolve_preset(f"single-{task}", preset.data_portion, preset.st_portion,
                                 preset.seed)
            ckpt, log_records = train_preset(sub, cfg, corpus)
            save_checkpoint(ckpt, os.path.join(out_dir, f"{task}.zsxl"))
            parts[task] = ckpt
            records += [dict(r, model=task) for r in log_records]
        asr, mt = parts["asr"].to_model(), parts["mt"].to_model()
        report = MetricsReport()
        evaluate_model(asr, {ASR: tests[ASR]}, corpus.lexicon, report, cfg.eval_max_len)
        evaluate_model(mt, {MT: tests[MT]}, corpus.lexicon, report, cfg.eval_max_len)
        evaluate_cascade(asr, mt, tests[ST], corpus.lexicon, report, cfg.eval_max_len)
        result = (parts["asr"], parts["mt"])
    else:
        ckpt, records = train_preset(preset, cfg, corpus, init_from)
        save_checkpoint(ckpt, os.path.join(out_dir, CHECKPOINT))
        model = ckpt.to_model()
        wanted = {d: tests[d] for d in (ASR, MT, ST) if _task(d) in preset.evaluates}
        report = evaluate_model(model, wanted, corpus.lexicon, max_len=cfg.eval_max_len)
        if analyze and preset.analyzable:
            analysis = analyze_model(model, corpus.test + corpus.valid, seed=preset.seed,
                                     dump_path=os.path.join(out_dir, STATES),
                                     meta={"model": preset.name, "split": "test+valid"})
            analysis.save(os.path.join(out_dir, ANALYSIS))
        result = ckpt
    report.save(os.path.join(out_dir, METRICS))
    _write_jsonl(os.path.join(out_dir, TRAIN_LOG), records)
    manifest = {
        "preset": preset.name,
        "kind": preset.kind,
        "seed": preset.seed,
        "data_portion": preset.data_portion,
        "st_portion": preset.st_portion,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "data_hash": corpus_digest(corpus),
        "init_from": None,
    }
    if isinstance(init_from, (str, os.PathLike)):
        manifest["init_from"] = {"path": os.fspath(init_from), "sha256": file_digest(init_from)}
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report, analysis, result


def _task(direction):
    return {ASR: "ASR", MT: "MT", ST: "ST"}[direction]
