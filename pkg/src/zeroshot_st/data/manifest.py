"""Corpus manifest: JSON lines plus a little-endian float32 frame sidecar.

Each manifest line holds ``split``, ``direction``, ``input_ref``, ``target_lang``
and ``output_text``. ``input_ref`` is ``"text:<input text>"`` for text inputs and
``"frames:<byte offset>"`` for audio, pointing at an utterance record in the
sidecar: ``uint32 F, uint32 D`` followed by ``F*D`` float32 values, row-major.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import FormatError, IntegrityError
from .corpus import Lang
from .datasets import AUDIO, Dataset, Direction, Sample

_HEADER = struct.Struct("<II")


def write_corpus_manifest(path, splits, frames_path=None):
    """Write ``{split name: [Dataset, ...]}`` to ``path`` and its frame sidecar."""
    frames_path = frames_path or os.fspath(path) + ".frames"
    with open(path, "w", encoding="utf-8") as out, open(frames_path, "wb") as side:
        for split, datasets in splits.items():
            for ds in datasets:
                for s in ds.samples:
                    if s.modality == AUDIO:
                        ref = f"frames:{side.tell()}"
                        f32 = np.ascontiguousarray(s.frames, dtype="<f4")
                        side.write(_HEADER.pack(*f32.shape))
                        side.write(f32.tobytes())
                    else:
                        ref = f"text:{s.input_text}"
                    record = {"split": split, "direction": ds.name, "input_ref": ref,
                              "target_lang": str(s.target_lang), "output_text": s.output_text,
                              "input_text": s.input_text}
                    out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return frames_path


def read_frames(blob, offset):
    if offset + _HEADER.size > len(blob):
        raise IntegrityError(f"frame header at offset {offset} runs past end of sidecar")
    n, d = _HEADER.unpack_from(blob, offset)
    start = offset + _HEADER.size
    end = start + 4 * n * d
    if end > len(blob):
        raise IntegrityError(f"frame block at offset {offset} is truncated")
    return np.frombuffer(blob, dtype="<f4", count=n * d, offset=start).reshape(n, d)


def read_corpus_manifest(path, vocab, frames_path=None):
    """Inverse of :func:`write_corpus_manifest`: ``{split: [Dataset, ...]}``."""
    frames_path = frames_path or os.fspath(path) + ".frames"
    blob = open(frames_path, "rb").read() if os.path.exists(frames_path) else b""
    splits = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                direction = Direction.parse(rec["direction"])
                kind, _, payload = rec["input_ref"].partition(":")
            except (ValueError, KeyError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed manifest record ({exc})") from None
            sample = Sample(direction=direction, target_lang=Lang(rec["target_lang"]),
                            output_ids=vocab.encode(rec["output_text"]),
                            output_text=rec["output_text"], input_text=rec.get("input_text", ""))
            if kind == "frames":
                sample.frames = read_frames(blob, int(payload)).astype(np.float64)
                sample.transcript_ids = vocab.encode(sample.input_text)
            elif kind == "text":
                sample.input_text = payload
                sample.input_ids = vocab.encode(payload)
            else:
                raise FormatError(f"{path}:{lineno}: unknown input_ref kind {kind!r}")
            datasets = splits.setdefault(rec["split"], {})
            datasets.setdefault(direction, Dataset(direction)).samples.append(sample)
    return {split: list(by_dir.values()) for split, by_dir in splits.items()}
