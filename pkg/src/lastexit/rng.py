"""Deterministic random-stream derivation for all Monte Carlo work.

Every stream is identified by the triple (master_seed, stream_id,
replicate_index).  The triple is hashed into a Philox counter-based
generator, so replicate streams are independent of each other and of the
order in which they are drawn: a replication loop can run forward,
backward, or in parallel and produce identical per-replicate output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 1 << 64


@dataclass(frozen=True)
class SeedSpec:
    """Names one family of reproducible random streams.

    ``master_seed`` identifies the experiment, ``stream_id`` the consumer
    within it (each subsystem should use its own).  Replicate streams are
    obtained from :meth:`stream`.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if not 0 <= int(value) < _U64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value!r}")

    def stream(self, replicate_index: int = 0) -> np.random.Generator:
        """Generator for one replicate.  Same triple, same bits, always."""
        if replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")
        entropy = (int(self.master_seed), int(self.stream_id), int(replicate_index))
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
