"""Monte-Carlo plumbing: estimate records and seeded, chunked accumulation.

Every stochastic operation in the package returns an :class:`McEstimate` and
is reproducible bit-for-bit from its (seed, samples) pair.  Accumulation is
chunked with per-chunk generators seeded from the master seed, and the
associative merge (sum, sum of squares, count) is applied in fixed chunk
order, so a thread budget never changes the result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int
    chunk: int = 200_000
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")


@dataclass(frozen=True)
class McEstimate:
    value: complex
    std_error: float
    samples: int
    seed: int

    @property
    def real(self) -> float:
        return self.value.real if isinstance(self.value, complex) else float(self.value)


def _chunk_moments(evaluate, seed, size):
    rng = np.random.default_rng(seed)
    vals = np.asarray(evaluate(rng, size))
    return vals.sum(), (np.abs(vals) ** 2).sum(), size


def accumulate(evaluate, cfg: McConfig) -> McEstimate:
    """Mean/stderr of ``evaluate(rng, size) -> array`` over cfg.samples draws.

    Chunk c uses the generator seeded with (seed, c), so the estimate is a
    pure function of (seed, samples, chunk).
    """
    sizes = []
    left = cfg.samples
    while left > 0:
        sizes.append(min(cfg.chunk, left))
        left -= sizes[-1]
    seeds = [np.random.SeedSequence((cfg.seed, c)).generate_state(1)[0] for c in range(len(sizes))]

    if cfg.threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda sc: _chunk_moments(evaluate, sc[0], sc[1]),
                                  zip(seeds, sizes)))
    else:
        parts = [_chunk_moments(evaluate, s, c) for s, c in zip(seeds, sizes)]

    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    count = sum(p[2] for p in parts)
    mean = total / count
    var = max(total_sq / count - abs(mean) ** 2, 0.0)
    stderr = float(np.sqrt(var / count))
    if abs(complex(mean).imag) == 0.0:
        mean = float(complex(mean).real)
    return McEstimate(mean, stderr, count, cfg.seed)
