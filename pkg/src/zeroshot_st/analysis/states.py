"""Aligned encoder-state export for SVCCA and the modality probe.

StateDump layout (little-endian)::

    b"ZSSD" | uint32 version | uint32 n | uint32 d | uint32 header length
    | header JSON | X as n*d float32 | Y as n*d float32
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core.tensor import no_grad
from ..data.corpus import Lang
from ..data.datasets import AUDIO, TEXT, Direction, make_sample
from ..errors import ArgumentError, FormatError, IntegrityError, VersionError, ZeroShotSTError
from ..evaluation.decoding import encode_inputs
from ..model.transformer import mean_pool

log = logging.getLogger(__name__)

MAGIC = b"ZSSD"
VERSION = 1
_PREFIX = struct.Struct("<4sIIII")

# view name -> (input language, modality)
VIEWS = {
    "src-text": (Lang.SRC, TEXT),
    "src-audio": (Lang.SRC, AUDIO),
    "tgt-text": (Lang.TGT, TEXT),
    "tgt-audio": (Lang.TGT, AUDIO),
    "rev-text": (Lang.SRC_R, TEXT),
}


def parse_view_pair(view_pair):
    names = view_pair.split(":") if isinstance(view_pair, str) else list(view_pair)
    if len(names) != 2 or any(n not in VIEWS for n in names):
        raise ArgumentError(f"view pair must be two of {sorted(VIEWS)} joined by ':', "
                            f"got {view_pair!r}")
    return names


@dataclass
class StateDump:
    X: np.ndarray
    Y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float32)
        self.Y = np.ascontiguousarray(self.Y, dtype=np.float32)
        if self.X.shape != self.Y.shape or self.X.ndim != 2:
            raise ArgumentError(f"views must be equal-shape matrices: {self.X.shape} vs "
                                f"{self.Y.shape}")

    def save(self, path):
        header = json.dumps(self.meta, sort_keys=True).encode("utf-8")
        n, d = self.X.shape
        with open(path, "wb") as fh:
            fh.write(_PREFIX.pack(MAGIC, VERSION, n, d, len(header)))
            fh.write(header)
            fh.write(self.X.astype("<f4").tobytes())
            fh.write(self.Y.astype("<f4").tobytes())
        return path

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < _PREFIX.size:
            raise IntegrityError(f"{path}: too short for a state dump")
        magic, version, n, d, hlen = _PREFIX.unpack_from(raw)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise VersionError(f"{path}: version {version}, expected {VERSION}")
        start = _PREFIX.size + hlen
        if len(raw) != start + 8 * n * d:
            raise IntegrityError(f"{path}: payload is {len(raw) - start} bytes, expected {8 * n * d}")
        meta = json.loads(raw[_PREFIX.size:start].decode("utf-8"))
        block = np.frombuffer(raw, dtype="<f4", offset=start).reshape(2, n, d)
        return cls(block[0].copy(), block[1].copy(), meta)


def view_inputs(pairs, view, vocab, feature_dim, audio_seed=0, noise_sigma=0.1):
    """Model inputs for one view of each pair; ``None`` where the view is unavailable."""
    lang, modality = VIEWS[view]
    direction = Direction(lang, modality, Lang.SRC)
    out = []
    for pair in pairs:
        try:
            s = make_sample(pair, direction, vocab, audio_seed, noise_sigma, feature_dim)
            item = s.frames if modality == AUDIO else s.input_ids
            out.append(item if len(item) else None)
        except ZeroShotSTError:
            out.append(None)
    return out


def _encode_all(model, inputs, tag, batch_size):
    outs = []
    for start in range(0, len(inputs), batch_size):
        outs.append(encode_inputs(model, inputs[start:start + batch_size], tag))
    return outs


def pooled_states(model, inputs, tag=Lang.SRC, batch_size=64):
    """Mean-pooled encoder outputs, one row per input."""
    rows = []
    with no_grad():
        for enc in _encode_all(model, inputs, tag, batch_size):
            rows.append(mean_pool(enc).data)
    return np.concatenate(rows) if rows else np.zeros((0, model.config.d_model))


def token_states(model, inputs, tag=Lang.SRC, batch_size=64):
    """Unpooled encoder outputs of real positions (the tag position excluded)."""
    rows = []
    for enc in _encode_all(model, inputs, tag, batch_size):
        mask = enc.mask.copy()
        mask[:, 0] = False
        rows.append(enc.states.data[mask])
    return np.concatenate(rows) if rows else np.zeros((0, model.config.d_model))


def aligned_views(model, pairs, view_pair="src-text:src-audio", tag=Lang.SRC, audio_seed=0,
                  noise_sigma=0.1, batch_size=64):
    """Inputs of both views for every pair where both are available."""
    a, b = parse_view_pair(view_pair)
    va = view_inputs(pairs, a, model.vocab, model.config.feature_dim, audio_seed, noise_sigma)
    vb = view_inputs(pairs, b, model.vocab, model.config.feature_dim, audio_seed, noise_sigma)
    keep = [i for i in range(len(pairs)) if va[i] is not None and vb[i] is not None]
    skipped = len(pairs) - len(keep)
    if skipped:
        log.warning("skipped %d of %d sentences with an unavailable view", skipped, len(pairs))
    return [va[i] for i in keep], [vb[i] for i in keep], skipped


def export_states(model, pairs, view_pair="src-text:src-audio", tag=Lang.SRC, meta=None,
                  path=None, **kw):
    """Pooled, row-aligned states of two views; optionally written to ``path``."""
    xa, xb, skipped = aligned_views(model, pairs, view_pair, tag, **kw)
    if not xa:
        raise ArgumentError("no sentence has both views available")
    info = {"view_pair": ":".join(parse_view_pair(view_pair)), "tag": str(Lang(tag)),
            "skipped": skipped}
    info.update(meta or {})
    dump = StateDump(pooled_states(model, xa, tag), pooled_states(model, xb, tag), info)
    if path is not None:
        dump.save(path)
    return dump


def probe_tokens(model, pairs, tag=Lang.SRC, **kw):
    """Token states of SRC audio (label 1) and SRC text (label 0) encodings."""
    text, audio, _ = aligned_views(model, pairs, "src-text:src-audio", tag, **kw)
    t = token_states(model, text, tag)
    a = token_states(model, audio, tag)
    states = np.concatenate([a, t])
    labels = np.concatenate([np.ones(len(a), dtype=int), np.zeros(len(t), dtype=int)])
    return states, labels


@dataclass
class AnalysisReport:
    view_pair: str
    svcca: float
    tpr: float
    tnr: float
    n_sentences: int
    n_tokens: int
    pooled_sq_error: float

    def __post_init__(self):
        if not -1e-9 <= self.svcca <= 1 + 1e-9:
            raise ArgumentError(f"svcca score {self.svcca} outside [0, 1]")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(**json.loads(fh.read()))
