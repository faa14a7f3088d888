"""Hadamard matrices, separable 2D derived patterns and the fast Walsh-Hadamard transform.

Matrices are the natural (Sylvester) order, ``H[u, x] = (-1) ** popcount(u & x)``.
With this order the even rows of ``H_{2^k}`` are the rows of ``H_{2^(k-1)}``
with every entry duplicated, so a tier-``k`` pattern ``(2u, 2v)`` is exactly the
tier-``k-1`` pattern ``(u, v)`` enlarged by pixel replication.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

K_MAX = 14

_H2 = np.array([[1, 1], [1, -1]], dtype=np.int8)


class SizeLimitError(ValueError):
    """Requested Hadamard order exceeds the configured cap."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_order(k: int, k_max: int) -> None:
    if not 1 <= k <= k_max:
        raise SizeLimitError(f"Hadamard order log2 must be in [1, {k_max}] (K_max cap), got {k}")


@lru_cache(maxsize=16)
def _cached_matrix(k: int) -> np.ndarray:
    h = _H2
    for _ in range(k - 1):
        h = np.kron(h, _H2)
    h.setflags(write=False)
    return h


def hadamard_matrix(k: int, k_max: int = K_MAX) -> np.ndarray:
    """Return ``H_{2^k}`` as a read-only int8 array built by repeated Kronecker products.

    ``H_{2^k} = H_{2^(k-1)} (x) H_2``. Since every factor is ``H_2`` the
    product is associative and equals ``H_2 (x) H_{2^(k-1)}`` as well.
    """
    _check_order(k, k_max)
    return _cached_matrix(k)


def hadamard_row(tier: int, u: int) -> np.ndarray:
    """Row ``u`` of ``H_{2^tier}`` as int8, computed from bit parity (tier 0 gives ``[1]``)."""
    n = 1 << tier
    if not 0 <= u < n:
        raise IndexError(f"row index {u} out of range for tier {tier}")
    x = np.arange(n, dtype=np.int64)
    parity = np.bitwise_count(np.int64(u) & x) & 1
    return (1 - 2 * parity).astype(np.int8)


@dataclass(frozen=True)
class Pattern:
    tier: int
    u: int
    v: int
    values: np.ndarray

    @property
    def side(self) -> int:
        return 1 << self.tier


def pattern_2d(tier: int, u: int, v: int) -> Pattern:
    """Separable derived pattern ``values[x, y] = H(u, x) * H(v, y)`` of side ``2**tier``.

    Equivalent to reshaping row ``u * 2**tier + v`` of ``H_{4^tier}`` row-major.
    """
    if tier < 0 or tier > K_MAX:
        raise SizeLimitError(f"tier must be in [0, {K_MAX}], got {tier}")
    n = 1 << tier
    if not (0 <= u < n and 0 <= v < n):
        raise IndexError(f"pattern index ({u}, {v}) out of range for tier {tier}")
    values = np.outer(hadamard_row(tier, u), hadamard_row(tier, v))
    return Pattern(tier, u, v, values)


def upsample_replicate(p, factor: int) -> np.ndarray:
    """Enlarge a pattern (or any 2D array) by duplicating each pixel into a factor x factor block."""
    if not _is_pow2(factor):
        raise ValueError(f"replication factor must be a positive power of two, got {factor}")
    values = p.values if isinstance(p, Pattern) else np.asarray(p)
    if factor == 1:
        return values.copy()
    return np.repeat(np.repeat(values, factor, axis=0), factor, axis=1)


def _fwht_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, -1)
    n = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < n:
        # pair element i with i + h inside each block of 2h
        blocks = a.reshape(*lead, n // (2 * h), 2, h)
        top = blocks[..., 0, :]
        bottom = blocks[..., 1, :]
        a = np.stack((top + bottom, top - bottom), axis=-2).reshape(*lead, n)
        h *= 2
    return np.moveaxis(a, -1, axis)


def fwht_2d(img) -> np.ndarray:
    """Separable natural-order Walsh-Hadamard transform of a square power-of-two image.

    ``out[u, v] = sum_{x, y} H(u, x) H(v, y) img[x, y]``. Only additions and
    subtractions are used, so integer-valued inputs transform exactly.
    Applying it twice multiplies the input by ``side**2``.
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"fwht_2d needs a square 2D array, got shape {a.shape}")
    if not _is_pow2(a.shape[0]):
        raise ValueError(f"fwht_2d needs a power-of-two side, got {a.shape[0]}")
    return _fwht_axis(_fwht_axis(a, 0), 1)
