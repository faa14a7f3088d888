"""Coarse-to-fine ordering of Hadamard derived patterns.

The sequence visits tier 0 (the all-ones frame), then the patterns new at
tier 1, then those new at tier 2, and so on. A pattern ``(u, v)`` at tier
``k`` is inherited from tier ``k-1`` when both indices are even, so the new
set at tier ``k`` is everything with ``u`` or ``v`` odd. Every prefix of
length ``4**k`` is therefore a complete tier-``k`` basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hadamard import K_MAX, SizeLimitError, hadamard_row, upsample_replicate, pattern_2d


def tier_of(m: int) -> int:
    """Smallest tier ``k`` with ``m < 4**k``."""
    if m < 0:
        raise IndexError(f"sequence index must be >= 0, got {m}")
    k = 0
    while m >= 4 ** k:
        k += 1
    return k


@lru_cache(maxsize=32)
def _new_pairs_array(tier: int) -> np.ndarray:
    if tier == 0:
        arr = np.zeros((1, 2), dtype=np.int64)
    else:
        n = 1 << tier
        u, v = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        keep = ((u & 1) | (v & 1)).astype(bool)
        arr = np.stack((u[keep], v[keep]), axis=1)
    arr.setflags(write=False)
    return arr


def new_pairs(tier: int) -> list[tuple[int, int]]:
    """Pattern indices first appearing at ``tier``, in lexicographic ``(u, v)`` order."""
    if tier < 0:
        raise ValueError(f"tier must be >= 0, got {tier}")
    return [(int(u), int(v)) for u, v in _new_pairs_array(tier)]


def tier_start(tier: int) -> int:
    return 0 if tier == 0 else 4 ** (tier - 1)


def seq_to_index(m: int) -> tuple[int, int, int]:
    """Map sequence position ``m`` to ``(tier, u, v)``."""
    tier = tier_of(m)
    u, v = _new_pairs_array(tier)[m - tier_start(tier)]
    return tier, int(u), int(v)


def seq_to_pattern(m: int, K: int) -> np.ndarray:
    """Full-frame (side ``2**K``) int8 pattern at sequence position ``m``."""
    if not 0 <= K <= K_MAX:
        raise SizeLimitError(f"K must be in [0, {K_MAX}], got {K}")
    if not 0 <= m < 4 ** K:
        raise IndexError(f"sequence index {m} out of range for K={K} (limit {4 ** K})")
    tier, u, v = seq_to_index(m)
    return upsample_replicate(pattern_2d(tier, u, v), 1 << (K - tier))


def sequence_indices(M: int) -> np.ndarray:
    """``(M, 3)`` array of ``(tier, u, v)`` for the first ``M`` sequence positions."""
    out = np.empty((M, 3), dtype=np.int64)
    m = 0
    tier = 0
    while m < M:
        pairs = _new_pairs_array(tier)
        take = min(len(pairs), M - m)
        out[m:m + take, 0] = tier
        out[m:m + take, 1:] = pairs[:take]
        m += take
        tier += 1
    return out


def sequence_patterns(K: int, start: int, stop: int) -> np.ndarray:
    """Stack of full-frame patterns for positions ``start <= m < stop``, shape ``(n, 2**K, 2**K)``."""
    if not 0 <= start <= stop <= 4 ** K:
        raise IndexError(f"range [{start}, {stop}) invalid for K={K}")
    idx = sequence_indices(stop)[start:]
    n = 1 << K
    out = np.empty((len(idx), n, n), dtype=np.int8)
    for tier in np.unique(idx[:, 0]):
        sel = idx[:, 0] == tier
        rep = 1 << (K - int(tier))
        rows = np.stack([hadamard_row(int(tier), int(u)) for u in range(1 << int(tier))])
        full = np.repeat(rows, rep, axis=1)  # (2**tier, 2**K)
        out[sel] = full[idx[sel, 1]][:, :, None] * full[idx[sel, 2]][:, None, :]
    return out


def conventional_budget(kappa_max: int) -> int:
    """Measurements needed to produce tiers 1..kappa_max by independent full-basis runs."""
    if kappa_max < 1:
        raise ValueError(f"kappa_max must be >= 1, got {kappa_max}")
    return sum(4 ** k for k in range(1, kappa_max + 1))


def progressive_budget(kappa_max: int) -> int:
    """Measurements the progressive sequence needs to reach tier ``kappa_max``."""
    return 4 ** kappa_max


def completed_tiers(M: int) -> list[int]:
    """Tiers whose full basis fits in the first ``M`` measurements."""
    tiers = []
    k = 0
    while 4 ** k <= M:
        tiers.append(k)
        k += 1
    return tiers


@dataclass
class AcquisitionPlan:
    K: int
    M: int | None = None
    snapshot_tiers: list[int] = field(init=False)

    def __post_init__(self):
        if not 0 <= self.K <= K_MAX:
            raise SizeLimitError(f"K must be in [0, {K_MAX}], got {self.K}")
        if self.M is None:
            self.M = 4 ** self.K
        if not 1 <= self.M <= 4 ** self.K:
            raise ValueError(f"M must be in [1, {4 ** self.K}] for K={self.K}, got {self.M}")
        self.snapshot_tiers = completed_tiers(self.M)

    @property
    def side(self) -> int:
        return 1 << self.K
