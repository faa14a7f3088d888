"""Image reconstruction from bucket records.

Two routes are provided. ``gi_correlate`` evaluates the correlation
estimator over the physical projection stream, one pattern at a time.
``fast_reconstruct`` uses the fact that a completed prefix is a complete
Hadamard basis and inverts it with a single transform.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .hadamard import fwht_2d, upsample_replicate
from .ordering import completed_tiers, sequence_indices, sequence_patterns
from .simulate import BucketRecord

GRAM_K_MAX = 5


@dataclass
class ReconImage:
    tier: int
    pixels: np.ndarray
    M: int
    normalization: str = "raw"
    scale: float = 1.0
    offset: float = 0.0
    method: str = "fast"

    @property
    def K(self) -> int:
        return self.pixels.shape[0].bit_length() - 1

    def native(self) -> np.ndarray:
        """Pixels at the native ``2**tier`` grid (coarse tiers are stored replicated)."""
        step = 1 << (self.K - self.tier)
        return self.pixels[::step, ::step].copy()

    def normalized(self) -> "ReconImage":
        """Affine map to [0, 1]: ``unit = (raw - offset) / scale``; flat images map to 0."""
        if self.normalization == "affine_unit":
            return self
        lo = float(self.pixels.min())
        span = float(self.pixels.max()) - lo
        scale = span if span > 0 else 1.0
        return replace(self, pixels=(self.pixels - lo) / scale, normalization="affine_unit",
                       scale=scale, offset=lo)

    def raw(self) -> np.ndarray:
        if self.normalization == "raw":
            return self.pixels
        return self.pixels * self.scale + self.offset


def _validate(record: BucketRecord, K: int | None) -> int:
    K = record.K if K is None else K
    if record.M < 1:
        raise ValueError("empty bucket record")
    if record.M > 4 ** K:
        raise ValueError(f"record has {record.M} entries, more than 4**K = {4 ** K}")
    return K


def gi_correlate(record: BucketRecord, K: int | None = None, batch: int | None = None) -> ReconImage:
    """Correlation estimate ``(1/R) sum_r (B_r - <B>)(I_r - <I>)`` over all ``R`` physical projections.

    Each sequence entry is expanded into the complementary projection pair
    ``(1 + P)/2`` and ``(1 - P)/2`` with bucket powers ``(F + s)/2`` and
    ``(F - s)/2``, where ``s`` is the signed-equivalent value and ``F = s_0`` is
    the total flux. Every pixel is lit in exactly half of the projections,
    so no pixel's column collapses into the mean (as the all-ones pattern
    would force on a bare signed stream).
    Uses every entry of the record; the native tier is the last completed one.
    Accumulation runs in ascending ``m`` with numpy's pairwise sum inside a batch.
    """
    K = _validate(record, K)
    n = 1 << K
    M = record.M
    s = record.signed_coefficients()
    flux = s[0]
    batch = batch or max(1, (1 << 21) // (n * n))
    R = 2 * M

    b_pairs = np.stack(((flux + s) / 2, (flux - s) / 2), axis=1)  # (M, 2)
    b_mean = b_pairs.sum() / R

    i_sum = np.zeros(n * n)
    for start in range(0, M, batch):
        p = sequence_patterns(K, start, min(M, start + batch)).reshape(-1, n * n).astype(np.float64)
        i_sum += ((1 + p) / 2).sum(axis=0) + ((1 - p) / 2).sum(axis=0)
    i_mean = i_sum / R

    acc = np.zeros(n * n)
    for start in range(0, M, batch):
        stop = min(M, start + batch)
        p = sequence_patterns(K, start, stop).reshape(-1, n * n).astype(np.float64)
        db = b_pairs[start:stop] - b_mean
        rows = np.concatenate(((1 + p) / 2 - i_mean, (1 - p) / 2 - i_mean))
        weights = np.concatenate((db[:, 0], db[:, 1]))
        acc += (weights[:, None] * rows).sum(axis=0)
    image = (acc / R).reshape(n, n)
    return ReconImage(completed_tiers(M)[-1], image, M, method="naive")


def fast_reconstruct(record: BucketRecord, K: int | None = None) -> ReconImage:
    """Inverse-transform reconstruction of the largest completed tier.

    Output is in reflectance units: each pixel is the block average of the
    scene over its tier cell (noiseless). Entries beyond the completed
    prefix are ignored.
    """
    K = _validate(record, K)
    tier = completed_tiers(record.M)[-1]
    count = 4 ** tier
    s = record.signed_coefficients()[:count]
    idx = sequence_indices(count)
    # lower-tier (u, v) sits at (u, v) * 2**(tier - t) in the tier grid
    shift = tier - idx[:, 0]
    grid = np.zeros((1 << tier, 1 << tier))
    grid[idx[:, 1] << shift, idx[:, 2] << shift] = s
    block_avg = fwht_2d(grid) / (count * 4 ** (K - tier))
    return ReconImage(tier, upsample_replicate(block_avg, 1 << (K - tier)), count, method="fast")


def progressive_snapshots(record: BucketRecord, K: int | None = None,
                          method: str = "fast") -> list[ReconImage]:
    """One reconstruction per completed tier, each from exactly its own prefix."""
    K = _validate(record, K)
    fn = {"fast": fast_reconstruct, "naive": gi_correlate}[method]
    return [fn(record.prefix(4 ** t), K) for t in completed_tiers(record.M)]


def pattern_matrix(K: int, M: int, mode: str = "differential") -> np.ndarray:
    """Explicit pattern matrix, one flattened physical projection per row.

    ``signed`` rows are the ±1 patterns, ``binary_offset`` rows ``(1 + P)/2``,
    and ``differential`` interleaves ``(1 + P)/2`` and ``(1 - P)/2`` (2M rows).
    """
    if K > GRAM_K_MAX:
        raise ValueError(f"K={K} too large to materialize the pattern matrix (limit {GRAM_K_MAX})")
    n = 1 << K
    p = sequence_patterns(K, 0, M).reshape(M, n * n).astype(np.float64)
    if mode == "signed":
        return p
    if mode == "binary_offset":
        return (1 + p) / 2
    if mode == "differential":
        out = np.empty((2 * M, n * n))
        out[0::2] = (1 + p) / 2
        out[1::2] = (1 - p) / 2
        return out
    raise ValueError(f"unknown mode {mode!r}")


def gram_matrix(K: int, M: int, mode: str = "differential") -> np.ndarray:
    phi = pattern_matrix(K, M, mode)
    psi = phi - phi.mean(axis=0, keepdims=True)
    return psi.T @ psi


def gram_fwhm(K: int, M: int, mode: str = "differential", row: int | None = None) -> int:
    """Number of entries in one row of ``Psi^T Psi`` at or above half that row's maximum.

    Equals the area (in pixels) of the resolution cell for a completed tier.
    The default row is the last pixel, which lies outside the cell holding
    the all-ones pattern's degenerate column in signed mode.
    """
    if K > GRAM_K_MAX:
        raise ValueError(f"K={K} too large to materialize the pattern matrix (limit {GRAM_K_MAX})")
    tiers = completed_tiers(M)
    if 4 ** tiers[-1] != M or tiers[-1] > K:
        raise ValueError(f"M={M} is not a completed tier count 4**k with k <= {K}")
    g = gram_matrix(K, M, mode)
    r = g[g.shape[0] - 1 if row is None else row]
    peak = r.max()
    if not peak > 0:
        raise ValueError(f"Gram row is identically zero for mode={mode!r}, M={M}")
    return int(np.count_nonzero(r >= peak / 2))
