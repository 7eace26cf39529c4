"""Preprocessing: per-dimension min-max normalization and PCA reduction.

The fitted pipeline maps a raw 48-feature profile to ``k`` principal
coordinates: min-max to [0, 1] per feature, then center/std-scale, then
project onto the top-k principal directions. Every stage is affine, so the
composed map carries an exact k x 48 Jacobian that the gameplan optimizer
uses for gradients. The ORTG target gets its own 1-dim min-max normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError


@dataclass
class MinMaxNormalizer:
    """Columnwise (x - min) / (max - min); degenerate columns map to 0."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def dim(self) -> int:
        return self.mins.shape[0]

    @property
    def span(self) -> np.ndarray:
        return self.maxs - self.mins

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of zero-range dimensions."""
        return self.maxs == self.mins

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        span = self.span.copy()
        span[self.degenerate] = 1.0
        out = (x - self.mins) / span
        if out.ndim == 1:
            out[self.degenerate] = 0.0
        else:
            out[:, self.degenerate] = 0.0
        return out

    def invert(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        out = z * self.span + self.mins
        if out.ndim == 1:
            out[self.degenerate] = self.mins[self.degenerate]
        else:
            out[:, self.degenerate] = self.mins[self.degenerate]
        return out

    def derivative(self) -> np.ndarray:
        """d apply / dx per dimension (0 on degenerate dimensions)."""
        d = np.zeros(self.dim)
        ok = ~self.degenerate
        d[ok] = 1.0 / self.span[ok]
        return d


def fit_minmax(samples: np.ndarray) -> MinMaxNormalizer:
    """Fit columnwise extrema. ``samples`` is (n, d); n >= 1, all finite."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] < 1 or samples.size == 0:
        raise FitError("cannot fit a normalizer on an empty sample list")
    if not np.all(np.isfinite(samples)):
        raise FitError("normalizer samples must be finite")
    return MinMaxNormalizer(mins=samples.min(axis=0), maxs=samples.max(axis=0))


@dataclass
class PcaModel:
    """Top-k principal directions of centered, std-scaled samples."""

    mean: np.ndarray  # (d,)
    scale: np.ndarray  # (d,) per-feature std, 1.0 where variance is zero
    components: np.ndarray  # (k, d) orthonormal rows
    explained_variance: np.ndarray  # (k,) nonincreasing
    degenerate_features: tuple[int, ...] = field(default_factory=tuple)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.scale
        return z @ self.components.T

    def inverse(self, coords: np.ndarray) -> np.ndarray:
        """Pseudo-inverse via the component transpose (exact up to truncation)."""
        z = np.asarray(coords, dtype=np.float64) @ self.components
        return z * self.scale + self.mean


def fit_pca(samples: np.ndarray, k: int) -> PcaModel:
    """PCA of the centered, std-scaled sample matrix via SVD.

    Sign convention: each component row is flipped so its largest-magnitude
    entry is nonnegative, making the decomposition reproducible.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    n, d = samples.shape
    if k < 1 or k > d:
        raise FitError(f"component count {k} outside [1, {d}]")
    if k >= n:
        raise FitError(f"need at least {k + 1} samples for k={k}, got {n}")

    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1)
    degenerate = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    scale = std.copy()
    scale[std == 0.0] = 1.0

    z = (samples - mean) / scale
    _, s, vt = np.linalg.svd(z, full_matrices=False)
    components = vt[:k].copy()
    explained = (s[:k] ** 2) / (n - 1)

    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0

    return PcaModel(
        mean=mean,
        scale=scale,
        components=components,
        explained_variance=explained,
        degenerate_features=degenerate,
    )


@dataclass
class TransformPipeline:
    """Min-max normalization (features + target) composed with PCA."""

    feature_normalizer: MinMaxNormalizer
    target_normalizer: MinMaxNormalizer
    pca: PcaModel

    @property
    def k(self) -> int:
        return self.pca.k

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Raw feature vector(s) -> k principal coordinates."""
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("pipeline input must be finite")
        return self.pca.apply(self.feature_normalizer.apply(x))

    def inverse_approx(self, coords: np.ndarray) -> np.ndarray:
        """Back to raw feature space, exact up to PCA truncation error."""
        return self.feature_normalizer.invert(self.pca.inverse(coords))

    def jacobian(self) -> np.ndarray:
        """Exact (k, 48) Jacobian of ``forward`` (the map is affine)."""
        inner = self.feature_normalizer.derivative() / self.pca.scale
        return self.pca.components * inner[np.newaxis, :]

    def normalize_target(self, y: float) -> float:
        return float(self.target_normalizer.apply(np.array([y]))[0])

    def denormalize_target(self, y_norm: float) -> float:
        return float(self.target_normalizer.invert(np.array([y_norm]))[0])

    @property
    def target_range(self) -> float:
        return float(self.target_normalizer.span[0])


def fit_pipeline(X: np.ndarray, y: np.ndarray, k: int) -> TransformPipeline:
    """Fit feature min-max, then PCA on the normalized features, plus the
    target normalizer."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    fnorm = fit_minmax(X)
    tnorm = fit_minmax(y.reshape(-1, 1))
    pca = fit_pca(fnorm.apply(X), k)
    return TransformPipeline(feature_normalizer=fnorm, target_normalizer=tnorm, pca=pca)
