"""Representation similarity (SVCCA), modality probing, and state export."""
from .analyze import analyze_model
from .probe import ModalityProbe, modality_probe, true_rates
from .states import (
    VIEWS,
    AnalysisReport,
    StateDump,
    aligned_views,
    export_states,
    pooled_states,
    probe_tokens,
    token_states,
)
from .svcca import SVCCA, canonical_correlations, svcca
