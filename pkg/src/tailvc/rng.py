"""Deterministic derivation of per-task random streams.

Every stochastic routine takes a 64-bit master seed and derives child
generators through ``substream(master, *path)``, where the path mixes a
string label with integer indices (k value, trial number, ...).  The
derivation uses ``numpy.random.SeedSequence`` spawn keys, so

* identical (master, path) pairs give bit-identical streams on every
  platform and in every process, and
* distinct paths give independent streams, which makes trial-parallel
  execution agree with serial execution regardless of scheduling order.

String labels are folded to integers with CRC-32 (stable across runs,
unlike the built-in ``hash``).
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path integers must be >= 0, got {part}")
        return int(part)
    raise TypeError(f"unsupported stream path component: {part!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Return the generator for the derived stream (master_seed, *path)."""
    key = tuple(_key_part(p) for p in path)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.default_rng(ss)
