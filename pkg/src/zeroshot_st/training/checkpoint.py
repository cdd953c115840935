"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"ZSXL" | uint32 version | uint32 header length | header JSON | float32 blob

The header holds the model config, vocabulary tokens, epoch, validation loss, a
parameter manifest ``[{name, shape, offset}]`` (offsets in bytes into the blob)
and, optionally, Adam state whose moment buffers are also stored in the blob.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ..core.optim import AdamState
from ..data.vocab import Vocabulary
from ..errors import FormatError, IntegrityError, VersionError
from ..model.config import ModelConfig
from ..model.params import init_parameters
from ..model.transformer import Seq2SeqModel

MAGIC = b"ZSXL"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    state: dict  # parameter name -> float64 array
    epoch: int = 0
    valid_loss: float = float("nan")
    optimizer: AdamState | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model, epoch=0, valid_loss=float("nan"), optimizer=None, meta=None):
        return cls(model.config, model.vocab, model.params.state(), epoch, valid_loss, optimizer,
                   dict(meta or {}))

    def to_model(self, seed=0):
        params = init_parameters(self.config, seed)
        params.load_state(self.state)
        return Seq2SeqModel(self.config, self.vocab, params, seed)


def _manifest(arrays, offset):
    entries = []
    for name, arr in arrays.items():
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += 4 * arr.size
    return entries, offset


def save_checkpoint(ckpt, path):
    """Write atomically: a temp file in the target directory, then rename."""
    if isinstance(ckpt, Seq2SeqModel):
        ckpt = Checkpoint.from_model(ckpt)
    params_manifest, end = _manifest(ckpt.state, 0)
    opt_header = None
    moment_arrays = {}
    if ckpt.optimizer is not None:
        opt = ckpt.optimizer
        moment_arrays = {f"first/{k}": v for k, v in opt.first.items()}
        moment_arrays.update({f"second/{k}": v for k, v in opt.second.items()})
        moments_manifest, end = _manifest(moment_arrays, end)
        opt_header = {"model_dim": opt.model_dim, "base_factor": opt.base_factor,
                      "warmup": opt.warmup, "beta1": opt.beta1, "beta2": opt.beta2,
                      "eps": opt.eps, "step": opt.step, "moments": moments_manifest}
    header = {"config": ckpt.config.to_dict(), "vocab": ckpt.vocab.tokens, "epoch": ckpt.epoch,
              "valid_loss": ckpt.valid_loss, "params": params_manifest, "optimizer": opt_header,
              "blob_bytes": end, "meta": ckpt.meta}
    header_bytes = json.dumps(header).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
            fh.write(header_bytes)
            for arr in list(ckpt.state.values()) + list(moment_arrays.values()):
                fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _read_arrays(manifest, blob):
    out = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        if start < 0 or start + 4 * count > len(blob):
            raise IntegrityError(
                f"array {entry['name']!r} with shape {shape} overruns the {len(blob)}-byte blob")
        out[entry["name"]] = np.frombuffer(blob, dtype="<f4", count=count, offset=start) \
            .reshape(shape).astype(np.float64)
    return out


def load_checkpoint(path):
    """Read and validate a checkpoint; nothing is returned on any failure."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _PREFIX.size:
        raise IntegrityError(f"{path}: file too short for a checkpoint header")
    magic, version, header_len = _PREFIX.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionError(f"{path}: format version {version}, this build reads {VERSION}")
    start = _PREFIX.size
    if start + header_len > len(raw):
        raise IntegrityError(f"{path}: header is truncated")
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path}: unreadable header ({exc})") from None
    blob = raw[start + header_len:]
    if len(blob) != header["blob_bytes"]:
        raise IntegrityError(
            f"{path}: blob has {len(blob)} bytes, header declares {header['blob_bytes']}")
    declared = sum(4 * int(np.prod(e["shape"])) for e in header["params"])
    opt = header.get("optimizer")
    if opt:
        declared += sum(4 * int(np.prod(e["shape"])) for e in opt["moments"])
    if declared != len(blob):
        raise IntegrityError(f"{path}: manifest shapes cover {declared} bytes, blob has {len(blob)}")
    config = ModelConfig.from_dict(header["config"])
    vocab = Vocabulary.from_tokens(header["vocab"])
    state = _read_arrays(header["params"], blob)
    optimizer = None
    if opt:
        moments = _read_arrays(opt["moments"], blob)
        optimizer = AdamState(opt["model_dim"], opt["base_factor"], opt["warmup"], opt["beta1"],
                              opt["beta2"], opt["eps"], opt["step"])
        for key, arr in moments.items():
            kind, name = key.split("/", 1)
            getattr(optimizer, kind)[name] = arr
    ckpt = Checkpoint(config, vocab, state, header["epoch"], header["valid_loss"], optimizer,
                      header.get("meta", {}))
    expected = set(init_parameters(config, 0))
    if set(state) != expected:
        raise IntegrityError(f"{path}: parameter names do not match the stored config")
    return ckpt
