"""Per-epoch batch scheduling across several datasets."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ArgumentError


@dataclass(frozen=True)
class DatasetSchedule:
    entries: tuple  # (dataset index, batch index) in visiting order
    batches: tuple  # batches[d][b] -> tuple of sample indices into dataset d

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def samples(self, datasets, entry):
        d, b = entry
        return [datasets[d].samples[i] for i in self.batches[d][b]]


def schedule_batches(datasets, batch_size, seed):
    """Shuffle each dataset, cut it into batches, and interleave proportionally.

    Batch ``k`` of a dataset with ``n`` batches is placed at time ``(k + 1) / n``;
    ties go to the lower dataset index. All datasets therefore finish together,
    and a 10-batch and a 5-batch dataset interleave as AAB AAB ...
    """
    if batch_size < 1:
        raise ArgumentError(f"batch size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(seed)
    batches = []
    for d, ds in enumerate(datasets):
        n = len(ds)
        if n == 0:
            raise ArgumentError(f"dataset {d} ({getattr(ds, 'name', d)}) is empty")
        order = rng.permutation(n)
        batches.append(tuple(tuple(int(i) for i in order[s:s + batch_size])
                             for s in range(0, n, batch_size)))
    keyed = [(Fraction(k + 1, len(bs)), d, k) for d, bs in enumerate(batches) for k in range(len(bs))]
    keyed.sort()
    return DatasetSchedule(tuple((d, k) for _, d, k in keyed), tuple(batches))
