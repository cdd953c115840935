"""``zeroshot-st`` command line: gen-data, train, finetune, eval, analyze, compare."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from ..analysis.analyze import analyze_model
from ..data.datasets import ASR, MT, ST, make_dataset, vocab_for_corpus
from ..data.manifest import write_corpus_manifest
from ..errors import ZeroShotSTError
from ..evaluation.report import evaluate_model
from ..training.checkpoint import load_checkpoint
from .compare import compare_report
from .presets import FINETUNE, catalog_text, resolve_preset
from .runconfig import RunConfig, load_run_config
from .runner import ANALYSIS, METRICS, STATES, build_corpus, corpus_digest, run_preset, test_sets

log = logging.getLogger("zeroshot_st")


def _config(args):
    return load_run_config(args.config) if args.config else RunConfig()


def _add_common(p, preset=True):
    p.add_argument("--config", help="JSON file of run-config overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    if preset:
        p.add_argument("--preset", required=True, help="experiment preset (see 'presets')")
        p.add_argument("--init-from", help="checkpoint to initialize from")
        p.add_argument("--data-portion", type=float, default=1.0,
                       help="fraction of the training pairs: 0.1, 0.25, 0.33 or 1.0")
        p.add_argument("--st-portion", type=float, default=0.10,
                       help="fraction of pairs used as ST data when fine-tuning")


def build_parser():
    parser = argparse.ArgumentParser(prog="zeroshot-st", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the synthetic corpus manifest")
    _add_common(p, preset=False)

    for name in ("train", "finetune"):
        p = sub.add_parser(name, help=f"{name} a preset and evaluate it")
        _add_common(p)
        p.add_argument("--no-analysis", action="store_true")

    p = sub.add_parser("eval", help="score a checkpoint on the test split")
    _add_common(p, preset=False)
    p.add_argument("checkpoint")

    p = sub.add_parser("analyze", help="SVCCA, pooled distance, and modality probe")
    _add_common(p, preset=False)
    p.add_argument("checkpoint")
    p.add_argument("--view-pair", default="src-text:src-audio")

    p = sub.add_parser("compare", help="tabulate metrics of several run directories")
    p.add_argument("runs", nargs="+")
    p.add_argument("--baseline", help="run directory (or its name) to take deltas against")
    p.add_argument("--out", help="also write the rows as JSON lines here")

    sub.add_parser("presets", help="list the preset catalog")
    return parser


def cmd_gen_data(args):
    cfg = _config(args).replace(corpus_seed=args.seed)
    corpus = build_corpus(cfg)
    vocab = vocab_for_corpus(corpus)
    os.makedirs(args.out, exist_ok=True)
    kw = dict(audio_seed=cfg.corpus_seed, noise_sigma=cfg.noise_sigma,
              feature_dim=cfg.feature_dim)
    splits = {split: [make_dataset(corpus.split(split), d, vocab, **kw) for d in (ASR, MT, ST)]
              for split in ("train", "valid", "test")}
    path = os.path.join(args.out, "corpus.jsonl")
    write_corpus_manifest(path, splits)
    with open(os.path.join(args.out, "lexicon.json"), "w", encoding="utf-8") as fh:
        json.dump({"mapping": corpus.lexicon.mapping, "vocab": vocab.tokens,
                   "data_hash": corpus_digest(corpus)}, fh, indent=1, sort_keys=True)
    print(f"wrote {path} ({sum(len(ds) for v in splits.values() for ds in v)} samples)")


def cmd_train(args):
    preset = resolve_preset(args.preset, args.data_portion, args.st_portion, args.seed)
    if args.command == "finetune" and preset.kind != FINETUNE:
        raise ZeroShotSTError(f"'finetune' runs fine-tuning presets (ft-st, ft-mix), "
                              f"not {preset.name!r}")
    report, analysis, _ = run_preset(preset, _config(args), args.out, args.init_from,
                                     analyze=not args.no_analysis)
    for e in report.entries:
        print(f"{e.task:>4} {e.metric:<10} {e.value:8.3f}  (n={e.count})")
    if analysis is not None:
        print(f"SVCCA {analysis.svcca:.3f}  TPR {analysis.tpr:.1f}%  TNR {analysis.tnr:.1f}%")


def _checkpoint_context(args):
    cfg = _config(args)
    ckpt = load_checkpoint(args.checkpoint)
    corpus = build_corpus(cfg)
    if vocab_for_corpus(corpus) != ckpt.vocab:
        raise ZeroShotSTError("checkpoint vocabulary does not match the configured corpus")
    os.makedirs(args.out, exist_ok=True)
    return cfg, ckpt.to_model(), corpus


def cmd_eval(args):
    cfg, model, corpus = _checkpoint_context(args)
    report = evaluate_model(model, test_sets(corpus, model.vocab, cfg), corpus.lexicon,
                            max_len=cfg.eval_max_len)
    report.save(os.path.join(args.out, METRICS))
    print(report.to_jsonl(), end="")


def cmd_analyze(args):
    _, model, corpus = _checkpoint_context(args)
    report = analyze_model(model, corpus.test + corpus.valid, args.view_pair, seed=args.seed,
                           dump_path=os.path.join(args.out, STATES),
                           meta={"model": args.checkpoint, "split": "test+valid"})
    report.save(os.path.join(args.out, ANALYSIS))
    print(report.to_json())


def cmd_compare(args):
    rows, table = compare_report(args.runs, args.baseline)
    print(table)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "finetune": cmd_train,
            "eval": cmd_eval, "analyze": cmd_analyze, "compare": cmd_compare,
            "presets": lambda args: print(catalog_text())}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ZeroShotSTError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
