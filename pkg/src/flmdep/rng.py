"""Counter-based random substreams and bootstrap multiplier laws.

Replicate ``l`` of a resampling run always draws from the Philox stream
whose key is derived from ``(seed, tag)`` and whose counter starts at
``l``. Results therefore never depend on how replicates are split across
workers or in which order they are evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np

# Stream tags; keep stable, they are part of the reproducibility contract.
TAG_WILD = 1
TAG_NAIVE = 2
TAG_PRECURSOR = 3
TAG_DATA = 10
TAG_DATASET_SEED = 11

_MAMMEN_LOW = -(math.sqrt(5.0) - 1.0) / 2.0
_MAMMEN_HIGH = (math.sqrt(5.0) + 1.0) / 2.0
_MAMMEN_P_LOW = (math.sqrt(5.0) + 1.0) / (2.0 * math.sqrt(5.0))


class Multiplier(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    MAMMEN = "mammen"


def stream_key(seed, *tags):
    """128-bit Philox key for ``seed`` and a tuple of nonnegative tags."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.SeedSequence([seed, *map(int, tags)]).generate_state(2, np.uint64)


def derive_seed(seed, *tags):
    """A child u64 seed, e.g. one per simulated dataset."""
    return int(stream_key(seed, TAG_DATASET_SEED, *tags)[0])


def substream(key, index):
    counter = np.array([0, 0, int(index), 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def draw_multipliers(gen, law, size):
    law = Multiplier(law)
    if law is Multiplier.GAUSSIAN:
        return gen.standard_normal(size)
    if law is Multiplier.RADEMACHER:
        return np.where(gen.random(size) < 0.5, -1.0, 1.0)
    return np.where(gen.random(size) < _MAMMEN_P_LOW, _MAMMEN_LOW, _MAMMEN_HIGH)


def multiplier_row(key, law, n, index, attempt=0):
    """Multipliers for replicate ``index``; ``attempt`` > 0 continues the same
    stream (used to redraw degenerate replicates)."""
    gen = substream(key, index)
    draws = draw_multipliers(gen, law, (attempt + 1) * n)
    return draws[attempt * n:]


def index_row(key, n, size, index, attempt=0):
    gen = substream(key, index)
    draws = gen.integers(0, n, size=(attempt + 1) * size)
    return draws[attempt * size:]


def _chunks(total, threads):
    threads = max(1, min(int(threads), total)) if total else 1
    bounds = np.linspace(0, total, threads + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def build_rows(row_fn, total, threads=1):
    """Stack ``row_fn(l)`` for ``l = 0..total-1``, optionally across threads.

    Output is identical for every ``threads`` value.
    """
    if total == 0:
        return np.empty((0, 0))

    def run(bounds):
        a, b = bounds
        return np.stack([row_fn(l) for l in range(a, b)])

    parts = _chunks(total, threads)
    if len(parts) == 1:
        return run(parts[0])
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return np.concatenate(list(pool.map(run, parts)))


def multiplier_matrix(seed, law, replicates, n, threads=1, tag=TAG_WILD):
    key = stream_key(seed, tag)
    return build_rows(lambda l: multiplier_row(key, law, n, l), replicates, threads)
