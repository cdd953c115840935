"""Multi-task training, validation, and early-stopped fine-tuning."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..core.optim import AdamState, adam_step, clip_grad_norm
from ..core.tensor import no_grad
from ..data.batching import collate
from ..data.schedule import schedule_batches
from ..errors import ArgumentError, NonFiniteError, TrainingError
from ..model.transformer import Seq2SeqModel, forward_loss
from .checkpoint import Checkpoint

log = logging.getLogger(__name__)


@dataclass
class TrainRun:
    config: object
    vocab: object
    datasets: list
    valid: list
    seed: int = 0
    max_epochs: int = 64
    max_steps: int | None = None
    batch_size: int = 32
    base_factor: float = 1.0
    warmup: int = 400
    clip_norm: float | None = 1.0
    patience: int | None = None
    init_state: dict | None = None
    log: list = field(default_factory=list)


class EarlyStopper:
    """Track the best validation loss; signal a stop after ``patience`` epochs
    without improvement (``None`` never stops)."""

    def __init__(self, patience=1):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = None
        self.best_payload = None
        self.bad_epochs = 0

    def update(self, epoch, loss, payload=None):
        if loss < self.best:
            self.best, self.best_epoch, self.best_payload = loss, epoch, payload
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.patience is not None and self.bad_epochs >= self.patience


def evaluate_loss(model, datasets, batch_size=64):
    """Unweighted mean over tasks of each task's token-weighted validation loss."""
    per_task = {}
    with no_grad(), model.evaluating():
        for ds in datasets:
            num = den = 0.0
            for start in range(0, len(ds), batch_size):
                batch = collate(ds.samples[start:start + batch_size], model.vocab,
                                model.config.feature_dim)
                total, _, _ = forward_loss(model, batch)
                n = batch.n_target_tokens
                num += total.item() * n
                den += n
            per_task[ds.name] = num / den
    if not per_task:
        raise ArgumentError("no validation datasets")
    return float(np.mean(list(per_task.values()))), per_task


def train_steps(model, datasets, optimizer, epoch_seed, batch_size, clip_norm=1.0,
                max_steps=None, on_step=None):
    """One epoch (or up to ``max_steps`` batches). Returns per-task mean CE."""
    schedule = schedule_batches(datasets, batch_size, epoch_seed)
    sums = {}
    model.train()
    for n, entry in enumerate(schedule):
        if max_steps is not None and n >= max_steps:
            break
        d, b = entry
        batch = collate(schedule.samples(datasets, entry), model.vocab, model.config.feature_dim)
        model.params.zero_grad()
        try:
            total, ce, aux = forward_loss(model, batch)
            value = total.item()
            if not math.isfinite(value):
                raise NonFiniteError("loss is not finite")
            total.backward()
        except NonFiniteError as exc:
            raise TrainingError(
                f"non-finite loss at optimizer step {optimizer.step + 1}, dataset "
                f"{datasets[d].name!r}, batch {b}: {exc}") from exc
        clip_grad_norm(model.params, clip_norm)
        adam_step(model.params, optimizer)
        acc = sums.setdefault(datasets[d].name, [0.0, 0.0, 0])
        acc[0] += ce.item()
        acc[1] += aux.item()
        acc[2] += 1
        if on_step is not None:
            on_step(optimizer.step, datasets[d].name, ce.item(), aux.item())
    model.eval()
    return {k: (v[0] / v[2], v[1] / v[2]) for k, v in sums.items()}


def _record(run, epoch, task, split, loss, t0, **extra):
    rec = {"epoch": epoch, "task": task, "split": split, "loss": loss,
           "wall_time": round(time.time() - t0, 3)}
    rec.update(extra)
    run.log.append(rec)
    log.debug("%s", rec)


def train(run, model=None, on_step=None):
    """Run multi-task training and return the lowest-validation-loss checkpoint.

    Each epoch visits every batch of every dataset once in proportional
    interleaving; validation runs after every epoch.
    """
    if not run.datasets:
        raise ArgumentError("no training datasets")
    for ds in run.datasets:
        if len(ds) == 0:
            raise ArgumentError(f"training dataset {ds.name!r} is empty")
    if model is None:
        model = Seq2SeqModel(run.config, run.vocab, seed=run.seed)
        if run.init_state is not None:
            model.params.load_state(run.init_state)
    model.reseed(run.seed)
    optimizer = AdamState(run.config.d_model, run.base_factor, run.warmup)
    stopper = EarlyStopper(run.patience)
    t0 = time.time()
    steps_left = run.max_steps
    first = {}

    def step_hook(step, task, ce, aux):
        # the first batch of each task gives its initial training loss (epoch 0)
        if task not in first:
            first[task] = ce
            _record(run, 0, task, "train", ce, t0, aux=aux, step=step)
        if on_step is not None:
            on_step(step, task, ce, aux)

    epoch = 0
    for epoch in range(1, run.max_epochs + 1):
        stats = train_steps(model, run.datasets, optimizer, [run.seed, epoch], run.batch_size,
                            run.clip_norm, steps_left, step_hook)
        for task, (ce, aux) in stats.items():
            _record(run, epoch, task, "train", ce, t0, aux=aux, step=optimizer.step)
        valid_loss, per_task = evaluate_loss(model, run.valid) if run.valid else (math.nan, {})
        for task, loss in per_task.items():
            _record(run, epoch, task, "valid", loss, t0, step=optimizer.step)
        _record(run, epoch, "all", "valid", valid_loss, t0, step=optimizer.step)
        score = valid_loss if run.valid else -epoch
        stop = stopper.update(epoch, score, model.params.state())
        if steps_left is not None:
            steps_left = run.max_steps - optimizer.step
            if steps_left <= 0:
                break
        if stop:
            log.info("validation loss stopped improving after epoch %d", epoch)
            break
    best_state = stopper.best_payload
    model.params.load_state(best_state)
    best_loss = stopper.best if run.valid else math.nan
    return Checkpoint(run.config, run.vocab, best_state, stopper.best_epoch, best_loss,
                      meta={"steps": optimizer.step, "epochs_run": epoch}), run.log


def finetune(checkpoint, datasets, valid, patience=1, max_epochs=64, seed=0, **run_options):
    """Continue training from ``checkpoint`` with fresh optimizer state.

    Stops at the first epoch whose validation loss does not improve (for the
    default ``patience=1``) and returns the best checkpoint.
    """
    if not datasets or any(len(ds) == 0 for ds in datasets):
        raise ArgumentError("fine-tuning needs non-empty datasets")
    run = TrainRun(checkpoint.config, checkpoint.vocab, datasets, valid, seed=seed,
                   max_epochs=max_epochs, patience=patience, init_state=checkpoint.state,
                   **run_options)
    return train(run)
