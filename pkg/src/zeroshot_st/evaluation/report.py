"""Metric records and the standard evaluation plan for a trained model."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..data.corpus import Lang
from ..data.datasets import ASR, MT, ST
from ..errors import ArgumentError, FormatError
from .decoding import cascade_translate, decode_samples
from .metrics import bleu, token_language_stats, wer

METRICS = ("WER", "BLEU", "both%", "src-only%", "tgt-only%")


@dataclass(frozen=True)
class MetricEntry:
    task: str
    metric: str
    value: float
    count: int

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ArgumentError(f"unknown metric {self.metric!r}")
        if self.metric == "WER" and self.value < 0:
            raise ArgumentError("WER cannot be negative")
        if self.metric == "BLEU" and not 0 <= self.value <= 100:
            raise ArgumentError(f"BLEU {self.value} outside [0, 100]")


@dataclass
class MetricsReport:
    entries: list = field(default_factory=list)

    def add(self, task, metric, value, count):
        self.entries.append(MetricEntry(task, metric, float(value), int(count)))
        return self

    def add_language_stats(self, task, stats):
        self.add(task, "both%", stats.both, stats.count)
        self.add(task, "src-only%", stats.src_only, stats.count)
        self.add(task, "tgt-only%", stats.tgt_only, stats.count)
        return self

    def get(self, task, metric):
        for e in self.entries:
            if e.task == task and e.metric == metric:
                return e.value
        raise KeyError((task, metric))

    def as_dict(self):
        return {f"{e.task}/{e.metric}": e.value for e in self.entries}

    def to_jsonl(self):
        return "".join(json.dumps(asdict(e), sort_keys=True) + "\n" for e in self.entries)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text):
        report = cls()
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                report.add(rec["task"], rec["metric"], rec["value"], rec["count"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"metrics line {n}: {exc}") from None
        return report

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())


def _refs(samples):
    return [s.output_text for s in samples]


def evaluate_model(model, test_sets, lexicon, report=None, max_len=96):
    """ASR WER, MT BLEU, and (zero-shot) ST BLEU plus output-language stats.

    ``test_sets`` maps directions to sample lists; the ST direction is decoded
    from ASR-style audio samples under the ``<TGT>`` tag with TGT references.
    """
    report = report if report is not None else MetricsReport()
    if ASR in test_sets:
        samples = test_sets[ASR]
        hyps = decode_samples(model, samples, max_len=max_len)
        report.add("ASR", "WER", wer(_refs(samples), hyps), len(samples))
    if MT in test_sets:
        samples = test_sets[MT]
        hyps = decode_samples(model, samples, max_len=max_len)
        report.add("MT", "BLEU", bleu(_refs(samples), hyps), len(samples))
    if ST in test_sets:
        samples = test_sets[ST]
        hyps = decode_samples(model, samples, Lang.TGT, max_len=max_len)
        report.add("ST", "BLEU", bleu(_refs(samples), hyps), len(samples))
        report.add_language_stats("ST", token_language_stats(
            hyps, lexicon.src_words, lexicon.tgt_words, lexicon.reversed_words))
    return report


def evaluate_cascade(asr_model, mt_model, st_samples, lexicon, report=None, max_len=96):
    report = report if report is not None else MetricsReport()
    hyps = cascade_translate(asr_model, mt_model, [s.frames for s in st_samples], max_len=max_len)
    report.add("ST", "BLEU", bleu(_refs(st_samples), hyps), len(st_samples))
    report.add_language_stats("ST", token_language_stats(
        hyps, lexicon.src_words, lexicon.tgt_words, lexicon.reversed_words))
    return report
