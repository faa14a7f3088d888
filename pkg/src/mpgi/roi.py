"""Target locking on a coarse snapshot and high-resolution acquisition inside the locked region."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ordering import AcquisitionPlan, conventional_budget, seq_to_pattern
from .recon import ReconImage
from .simulate import NOISELESS, BucketRecord, NoiseModel, Scene, projections_per_index, run_acquisition


class NoTargetError(RuntimeError):
    """Snapshot has no cell above the lock threshold."""


@dataclass(frozen=True)
class RegionOfInterest:
    origin: tuple[int, int]  # (row, col) of the top-left pixel
    side: int
    lock_tier: int

    @property
    def r(self) -> int:
        return self.side.bit_length() - 1

    @property
    def slices(self) -> tuple[slice, slice]:
        r0, c0 = self.origin
        return slice(r0, r0 + self.side), slice(c0, c0 + self.side)

    def check_inside(self, frame_side: int) -> None:
        r0, c0 = self.origin
        if self.side < 1 or self.side & (self.side - 1):
            raise ValueError(f"ROI side must be a power of two, got {self.side}")
        if r0 < 0 or c0 < 0 or r0 + self.side > frame_side or c0 + self.side > frame_side:
            raise ValueError(f"ROI {self} lies outside the {frame_side}x{frame_side} frame")

    def is_full_frame(self, frame_side: int) -> bool:
        return self.origin == (0, 0) and self.side == frame_side


def _snap_axis(lo: int, hi: int, side: int, cell: int, frame: int) -> int | None:
    """Aligned origin for a window of ``side`` covering pixels ``[lo, hi)``, or None."""
    first = max(0, -(-(hi - side) // cell) * cell)
    last = min(lo, frame - side) // cell * cell
    if first > last:
        return None
    centre = (lo + hi - side) / 2
    candidates = range(first, last + 1, cell)
    return min(candidates, key=lambda o: (abs(o - centre), o))


def lock_target(snapshot: ReconImage, alpha: float = 1.0) -> RegionOfInterest:
    """Bounding square of the coarse cells brighter than ``mean + alpha * std``.

    The box is grown to the smallest power-of-two square whose origin lies on
    the snapshot's cell grid and which stays inside the frame.
    """
    cells = snapshot.normalized().native()
    mu, sd = float(cells.mean()), float(cells.std())
    if sd == 0:
        raise NoTargetError(f"snapshot at tier {snapshot.tier} is uniform")
    hot = np.argwhere(cells > mu + alpha * sd)
    if len(hot) == 0:
        raise NoTargetError(f"no cell above mean + {alpha} std at tier {snapshot.tier}")
    frame = snapshot.pixels.shape[0]
    cell = frame >> snapshot.tier
    (r_lo, c_lo), (r_hi, c_hi) = hot.min(axis=0) * cell, (hot.max(axis=0) + 1) * cell
    side = max(cell, 1 << int(max(r_hi - r_lo, c_hi - c_lo) - 1).bit_length())
    while side <= frame:
        r0 = _snap_axis(int(r_lo), int(r_hi), side, cell, frame)
        c0 = _snap_axis(int(c_lo), int(c_hi), side, cell, frame)
        if r0 is not None and c0 is not None:
            return RegionOfInterest((r0, c0), side, snapshot.tier)
        side *= 2
    raise AssertionError("full frame always contains the box")


def roi_pattern(m: int, roi: RegionOfInterest, K: int) -> np.ndarray:
    """Full-frame pattern: zero outside the ROI, ROI-local sequence pattern ``m`` inside."""
    roi.check_inside(1 << K)
    out = np.zeros((1 << K, 1 << K), dtype=np.int8)
    out[roi.slices] = seq_to_pattern(m, roi.r)
    return out


def roi_acquire(scene: Scene, roi: RegionOfInterest, target_tier: int | None = None,
                mode: str = "differential", noise: NoiseModel = NOISELESS, seed: int = 0,
                method: str = "transform") -> BucketRecord:
    """Bucket stream for the ROI-restricted progressive sequence, ``4**target_tier`` entries.

    Patterns are dark outside the ROI, so each bucket only integrates the ROI
    crop; the record is indexed in ROI-local coordinates (``record.K = roi.r``).
    """
    roi.check_inside(scene.side)
    target_tier = roi.r if target_tier is None else target_tier
    if not 0 <= target_tier <= roi.r:
        raise ValueError(f"target tier {target_tier} must be in [0, {roi.r}] for ROI side {roi.side}")
    crop = Scene(scene.reflectance[roi.slices], f"{scene.provenance};roi={roi.origin}+{roi.side}")
    return run_acquisition(crop, AcquisitionPlan(roi.r, 4 ** target_tier), mode, noise, seed, method)


def composite(background: ReconImage, roi_image: ReconImage, roi: RegionOfInterest) -> ReconImage:
    """Coarse background with the ROI replaced by the high-resolution reconstruction (hard seam)."""
    frame = background.pixels.shape[0]
    r0, c0 = roi.origin
    if r0 >= frame or c0 >= frame or r0 + roi.side <= 0 or c0 + roi.side <= 0:
        raise ValueError(f"ROI {roi} does not intersect the {frame}x{frame} frame")
    roi.check_inside(frame)
    if roi_image.pixels.shape != (roi.side, roi.side):
        raise ValueError(f"ROI image shape {roi_image.pixels.shape} does not match ROI side {roi.side}")
    if background.normalization != roi_image.normalization:
        raise ValueError("background and ROI image use different normalizations")
    if roi.is_full_frame(frame):
        return roi_image
    pixels = background.pixels.copy()
    pixels[roi.slices] = roi_image.pixels
    return replace(background, pixels=pixels, method=f"composite({background.method}+{roi_image.method})")


@dataclass(frozen=True)
class BudgetReport:
    lock_measurements: int
    roi_measurements: int
    mpgi_roi_total: int
    full_frame_progressive: int
    conventional: int
    projections_per_measurement: int
    equivalent_tier: int

    @property
    def mpgi_roi_projections(self) -> int:
        return self.mpgi_roi_total * self.projections_per_measurement

    @property
    def full_frame_projections(self) -> int:
        return self.full_frame_progressive * self.projections_per_measurement

    def as_table(self) -> str:
        rows = [
            ("lock_prefix", self.lock_measurements),
            ("roi_basis", self.roi_measurements),
            ("mpgi_roi_total", self.mpgi_roi_total),
            ("full_frame_progressive", self.full_frame_progressive),
            ("conventional", self.conventional),
            ("projections_per_measurement", self.projections_per_measurement),
            ("mpgi_roi_projections", self.mpgi_roi_projections),
            ("full_frame_projections", self.full_frame_projections),
        ]
        return "quantity,count\n" + "".join(f"{k},{v}\n" for k, v in rows)


def budget_report(lock_path, roi: RegionOfInterest, target_tier: int | None, K: int,
                  mode: str = "differential") -> BudgetReport:
    """Measurement counts for lock + ROI refinement against full-frame acquisition at equal ROI detail.

    The lock prefix is shared across an escalation path, so it costs
    ``4**max(lock_path)``. When the ROI is the whole frame the lock prefix is
    the start of the same sequence and is not paid twice.
    """
    target_tier = roi.r if target_tier is None else target_tier
    lock = 4 ** max(lock_path) if lock_path else 0
    roi_m = 4 ** target_tier
    # full-frame tier with the same pixel pitch as the ROI reconstruction
    equiv = K - (roi.r - target_tier)
    full = 4 ** equiv
    total = max(lock, roi_m) if roi.is_full_frame(1 << K) else lock + roi_m
    conv = conventional_budget(equiv) if equiv >= 1 else 1
    return BudgetReport(lock, roi_m, total, full, conv, projections_per_index(mode), equiv)
