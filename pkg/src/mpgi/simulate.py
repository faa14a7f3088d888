"""Forward model: scenes, bucket-detector measurements and background-light noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hadamard import K_MAX, SizeLimitError, fwht_2d
from .ordering import AcquisitionPlan, sequence_indices, sequence_patterns

MODES = ("signed", "differential", "binary_offset")

# reference DSNR levels from the optical experiment; labels only
DSNR_PRESETS = {"system_invalid": 8.62, "high_res_threshold": 32.71}


def projections_per_index(mode: str) -> int:
    _check_mode(mode)
    return 2 if mode == "differential" else 1


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass
class Scene:
    reflectance: np.ndarray
    provenance: str = "array"

    def __post_init__(self):
        r = np.asarray(self.reflectance, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"scene must be square, got shape {r.shape}")
        n = r.shape[0]
        if n < 1 or n & (n - 1):
            raise ValueError(f"scene side must be a power of two, got {n}")
        if not np.all(np.isfinite(r)):
            raise ValueError("scene contains non-finite values")
        if r.min() < 0 or r.max() > 1:
            raise ValueError("scene reflectance must lie in [0, 1]")
        self.reflectance = r

    @property
    def side(self) -> int:
        return self.reflectance.shape[0]

    @property
    def K(self) -> int:
        return self.side.bit_length() - 1

    @property
    def flux(self) -> float:
        return float(self.reflectance.sum())

    @classmethod
    def from_array(cls, arr, provenance: str = "array") -> "Scene":
        """Build a scene, zero-padding (centered) to the next power-of-two square."""
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"scene must be 2D, got shape {a.shape}")
        h, w = a.shape
        n = 1 << max(0, (max(h, w) - 1).bit_length())
        if (h, w) == (n, n):
            return cls(a, provenance)
        top, left = (n - h) // 2, (n - w) // 2
        out = np.zeros((n, n))
        out[top:top + h, left:left + w] = a
        return cls(out, f"{provenance};padded {h}x{w}->{n}x{n} at ({top},{left})")


@dataclass
class NoiseModel:
    kind: str = "none"
    sigma: float = 0.0
    mean_offset: float = 0.0
    target_dsnr_db: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "none" and (self.sigma != 0 or self.mean_offset != 0):
            raise ValueError("noise kind 'none' requires sigma = mean_offset = 0")

    @property
    def is_noiseless(self) -> bool:
        return self.kind == "none" or (self.sigma == 0 and self.mean_offset == 0)

    def samples(self, seed: int, n: int) -> np.ndarray:
        """Background samples ``E_0 .. E_{n-1}``; draw ``m`` is position ``m`` of a seeded Philox stream."""
        if self.is_noiseless:
            return np.zeros(n)
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        return self.mean_offset + self.sigma * rng.standard_normal(n)


NOISELESS = NoiseModel()


@dataclass
class BucketRecord:
    values: np.ndarray
    mode: str = "differential"
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    K: int = 0
    signal_mean: float | None = None
    noise_samples: np.ndarray | None = None

    def __post_init__(self):
        _check_mode(self.mode)
        self.values = np.asarray(self.values, dtype=np.float64).ravel()

    @property
    def M(self) -> int:
        return len(self.values)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(m, float(b)) for m, b in enumerate(self.values)]

    @property
    def projections(self) -> int:
        return self.M * projections_per_index(self.mode)

    @property
    def achieved_dsnr_db(self) -> float:
        from .metrics import dsnr_db

        if self.noise_samples is None or self.signal_mean is None:
            return math.inf
        return dsnr_db(self.signal_mean, self.noise_samples)

    def prefix(self, M: int) -> "BucketRecord":
        if not 1 <= M <= self.M:
            raise ValueError(f"prefix length {M} out of range [1, {self.M}]")
        ns = None if self.noise_samples is None else self.noise_samples[:M]
        return BucketRecord(self.values[:M].copy(), self.mode, self.seed, self.noise, self.K,
                            self.signal_mean, ns)

    def signed_coefficients(self) -> np.ndarray:
        """Per-index signed-pattern equivalents ``sum P * O``, undoing the mode offset.

        Position 0 is the all-ones pattern, so in binary-offset mode its value is
        the total flux and ``s_m = 2 B_m - B_0`` for ``m >= 1``.
        """
        if self.mode != "binary_offset":
            return self.values.copy()
        s = 2.0 * self.values - self.values[0]
        s[0] = self.values[0]
        return s


def bucket(pattern, scene, mode: str = "differential") -> float:
    """Single bucket value for a signed-unit pattern on a scene."""
    _check_mode(mode)
    p = np.asarray(pattern, dtype=np.float64)
    o = scene.reflectance if isinstance(scene, Scene) else np.asarray(scene, dtype=np.float64)
    if p.shape != o.shape:
        raise ValueError(f"pattern shape {p.shape} does not match scene shape {o.shape}")
    if mode == "signed":
        return float(np.sum(p * o))
    plus = float(np.sum((1 + p) / 2 * o))
    if mode == "binary_offset":
        return plus
    minus = float(np.sum((1 - p) / 2 * o))
    return plus - minus


def block_sums(img: np.ndarray, tier: int) -> np.ndarray:
    n = img.shape[0]
    c = 1 << tier
    return img.reshape(c, n // c, c, n // c).sum(axis=(1, 3))


def signed_sequence_values(reflectance: np.ndarray, M: int) -> np.ndarray:
    """Noiseless signed buckets for the first ``M`` sequence positions, via one transform per tier."""
    idx = sequence_indices(M)
    out = np.empty(M)
    for tier in np.unique(idx[:, 0]):
        sel = idx[:, 0] == tier
        coeff = fwht_2d(block_sums(reflectance, int(tier)))
        out[sel] = coeff[idx[sel, 1], idx[sel, 2]]
    return out


def _mode_values(signed: np.ndarray, flux: float, mode: str) -> np.ndarray:
    if mode == "signed":
        return signed
    plus = (flux + signed) / 2
    if mode == "binary_offset":
        return plus
    minus = (flux - signed) / 2
    return plus - minus


def mean_signal(scene: Scene, M: int, mode: str) -> float:
    """Mean detector power per physical projection, the signal term of the DSNR.

    Differential (and idealized signed) projections come in complementary
    pairs whose powers sum to the total flux, so the mean is ``flux / 2``.
    Binary-offset mode averages the single non-negative projections.
    """
    _check_mode(mode)
    if mode != "binary_offset":
        return scene.flux / 2
    signed = signed_sequence_values(scene.reflectance, M)
    return float(np.mean((scene.flux + signed) / 2))


def calibrate_noise(target_dsnr_db: float, mean_bucket: float) -> NoiseModel:
    """Gaussian background with ``sigma = mean_bucket * 10 ** (-dsnr / 10)``."""
    if not mean_bucket > 0:
        raise ValueError(f"mean bucket signal must be positive, got {mean_bucket}")
    if math.isinf(target_dsnr_db) and target_dsnr_db > 0:
        return NoiseModel(target_dsnr_db=math.inf)
    sigma = mean_bucket * 10 ** (-target_dsnr_db / 10)
    return NoiseModel("gaussian", sigma, 0.0, float(target_dsnr_db))


def noise_for_dsnr(scene: Scene, target_dsnr_db: float, mode: str, M: int | None = None) -> NoiseModel:
    M = 4 ** scene.K if M is None else M
    return calibrate_noise(target_dsnr_db, mean_signal(scene, M, mode))


def run_acquisition(scene: Scene, plan: AcquisitionPlan, mode: str = "differential",
                    noise: NoiseModel = NOISELESS, seed: int = 0,
                    method: str = "transform") -> BucketRecord:
    """Simulate the bucket stream for the first ``plan.M`` patterns of the progressive sequence.

    ``method="direct"`` projects every materialized pattern onto the scene;
    ``method="transform"`` gets the same sums from one Walsh-Hadamard
    transform of the block-summed scene per tier.
    """
    _check_mode(mode)
    if plan.K != scene.K:
        raise ValueError(f"plan K={plan.K} does not match scene side {scene.side}")
    M = plan.M
    if method == "transform":
        signed = signed_sequence_values(scene.reflectance, M)
        values = _mode_values(signed, scene.flux, mode)
    elif method == "direct":
        values = np.empty(M)
        batch = max(1, (1 << 22) // (scene.side ** 2))
        for start in range(0, M, batch):
            pats = sequence_patterns(plan.K, start, min(M, start + batch))
            for i, p in enumerate(pats):
                values[start + i] = bucket(p, scene, mode)
    else:
        raise ValueError(f"unknown method {method!r}")
    e = noise.samples(seed, M)
    sig = mean_signal(scene, M, mode) if scene.flux > 0 else 0.0
    return BucketRecord(values + e, mode, seed, noise, plan.K, sig,
                        None if noise.is_noiseless else e)


# ----- synthetic scenes -----

def _square(n, rng, size=None, origin=None, level=1.0, background=0.05):
    size = max(1, n // 5) if size is None else size
    img = np.full((n, n), background)
    if origin is None:
        origin = tuple(int(x) for x in rng.integers(0, n - size + 1, size=2))
    r, c = origin
    img[r:r + size, c:c + size] = level
    return img


def _bars(n, rng, periods=(2, 4, 8), background=0.05):
    img = np.full((n, n), background)
    band = n // len(periods)
    for i, period in enumerate(periods):
        cols = (np.arange(n) // max(1, n * period // 64)) % 2 == 0
        img[i * band:(i + 1) * band, cols] = 0.9
    return img


def _aircraft(n, rng, background=0.05, level=0.9, shift=None):
    y, x = np.mgrid[0:n, 0:n] / n
    if shift is None:
        shift = rng.uniform(-0.05, 0.05, size=2)
    y = y - shift[0]
    x = x - shift[1]
    cy, cx = 0.5, 0.5
    fuselage = ((x - cx) / 0.05) ** 2 + ((y - cy) / 0.32) ** 2 <= 1
    dx = np.abs(x - cx)
    wing = (dx <= 0.38) & (y >= 0.42 + 0.2 * dx) & (y <= 0.52 + 0.2 * dx)
    tail = (dx <= 0.14) & (y >= 0.76 + 0.1 * dx) & (y <= 0.80 + 0.1 * dx)
    engines = np.zeros_like(fuselage)
    for ex in (cx - 0.18, cx + 0.18):
        engines |= ((x - ex) / 0.025) ** 2 + ((y - 0.5) / 0.06) ** 2 <= 1
    img = np.full((n, n), background)
    img[fuselage | wing | tail] = level
    img[engines] = 0.6
    return img


_GENERATORS = {"square": _square, "bars": _bars, "aircraft": _aircraft}


def synthetic_scene(name: str, K: int, seed: int = 0, **params) -> Scene:
    """Synthetic scene of side ``2**K`` by generator name (``square``, ``bars``, ``aircraft``)."""
    try:
        gen = _GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown synthetic scene {name!r}; expected one of {sorted(_GENERATORS)}")
    if not 0 <= K <= K_MAX:
        raise SizeLimitError(f"K must be in [0, {K_MAX}], got {K}")
    rng = np.random.default_rng(seed)
    img = np.clip(gen(1 << K, rng, **params), 0.0, 1.0)
    return Scene(img, f"synthetic:{name}:seed={seed}")
