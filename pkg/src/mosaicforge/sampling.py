"""Seeded random draws with a fixed output budget per draw.

The generator is PCG64 (numpy's bit generator, seeded through
``SeedSequence``). Only its raw 64-bit outputs are used; every distribution
below is derived here so that each draw consumes a documented, fixed number
of outputs:

==================  =========================================
draw                raw outputs consumed
==================  =========================================
``uniform``         1  (top 53 bits -> [0, 1))
``below(n)``        1  (multiply-high, bias < n / 2**64)
``draw_indices``    4
``draw_gate``       1
``draw_center``     2  (cx, then cy)
``draw_permutation``  k - 1
``draw_scale_jitter`` 1
==================  =========================================
"""

from __future__ import annotations

import numpy as np

from .geometry import SpliceCenter, round_half_up

MASK64 = (1 << 64) - 1


class SamplingError(ValueError):
    pass


def worker_seed(seed: int, worker_index: int) -> int:
    """Seed for one worker's stream: ``seed XOR worker_index`` (then hashed by SeedSequence)."""
    return (seed ^ worker_index) & MASK64


class RandomStream:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise SamplingError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._bitgen = np.random.PCG64(seed)
        self.outputs_consumed = 0

    def next_u64(self) -> int:
        self.outputs_consumed += 1
        return int(self._bitgen.random_raw())

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` from a single output."""
        if n <= 0:
            raise SamplingError(f"range must be positive, got {n}")
        return (self.next_u64() * n) >> 64


def draw_indices(stream: RandomStream, dataset_size: int) -> list[int]:
    """Four distinct indices in ``[0, dataset_size)``, in draw order.

    Sparse partial Fisher-Yates: step k picks from the ``n - k`` slots not yet taken.
    """
    n = dataset_size
    if n < 4:
        raise SamplingError(f"need at least 4 images, dataset has {n}")
    swapped: dict[int, int] = {}
    picked = []
    for k in range(4):
        j = k + stream.below(n - k)
        picked.append(swapped.get(j, j))
        swapped[j] = swapped.get(k, k)
    return picked


def draw_gate(stream: RandomStream, select_prob: float) -> bool:
    if not 0 <= select_prob <= 1:
        raise SamplingError(f"select probability must be in [0, 1], got {select_prob}")
    return stream.uniform() < select_prob


def center_range(canvas_side: int, border_fraction: float) -> tuple[int, int]:
    if not 0 <= border_fraction < 0.5:
        raise SamplingError(f"border fraction must be in [0, 0.5), got {border_fraction}")
    border = round_half_up(border_fraction * canvas_side)
    lo, hi = border, canvas_side - border
    if hi < lo:
        lo = hi = canvas_side // 2
    return lo, hi


def draw_center(stream: RandomStream, canvas_side: int, border_fraction: float) -> SpliceCenter:
    lo, hi = center_range(canvas_side, border_fraction)
    cx = lo + stream.below(hi - lo + 1)
    cy = lo + stream.below(hi - lo + 1)
    return SpliceCenter(cx, cy)


def draw_permutation(stream: RandomStream, k: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(k)``, filling positions from index 0 upwards."""
    if k < 1:
        raise SamplingError(f"permutation size must be >= 1, got {k}")
    perm = list(range(k))
    for i in range(k - 1):
        j = i + stream.below(k - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def draw_scale_jitter(stream: RandomStream, lo: float, hi: float) -> float:
    if not 0 < lo <= hi:
        raise SamplingError(f"invalid scale range [{lo}, {hi}]")
    u = stream.uniform()
    if lo == hi:
        return lo
    return lo + (hi - lo) * u
