"""One-call analysis of a trained model: SVCCA, pooled distance, modality probe."""
from __future__ import annotations

import numpy as np

from ..data.corpus import Lang
from .probe import modality_probe
from .states import AnalysisReport, export_states, probe_tokens
from .svcca import svcca


def analyze_model(model, pairs, view_pair="src-text:src-audio", tag=Lang.SRC, seed=0,
                  dump_path=None, meta=None):
    dump = export_states(model, pairs, view_pair, tag, meta=meta, path=dump_path)
    X, Y = dump.X.astype(np.float64), dump.Y.astype(np.float64)
    score = svcca(X, Y)
    sq_error = float(((X - Y) ** 2).mean())
    states, labels = probe_tokens(model, pairs, tag)
    tpr, tnr = modality_probe(states, labels, seed=seed)
    return AnalysisReport(dump.meta["view_pair"], score, tpr, tnr, len(X), len(labels), sq_error)
