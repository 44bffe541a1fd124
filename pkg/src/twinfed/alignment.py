"""Distributional alignment diagnostics between real and twin datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InvalidInputError


@dataclass
class AlignmentReport:
    n_real: int
    n_twin: int
    d: int
    mean_gap: float
    var_gap: float
    mmd: float
    swd: float
    explained_variance: tuple[float, float]
    pca_real: np.ndarray = field(repr=False)
    pca_twin: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "samples_real": self.n_real,
            "samples_twin": self.n_twin,
            "features": self.d,
            "mean_gap": self.mean_gap,
            "var_gap": self.var_gap,
            "mmd": self.mmd,
            "swd": self.swd,
            "pca_explained_variance": list(self.explained_variance),
        }


def _check_dims(real: Dataset, twin: Dataset):
    if real.d != twin.d:
        raise InvalidInputError(f"feature dimension mismatch: {real.d} vs {twin.d}")


def moment_gaps(real: Dataset, twin: Dataset) -> tuple[float, float]:
    """Average absolute per-feature mean gap and (population) variance gap."""
    _check_dims(real, twin)
    mean_gap = float(np.mean(np.abs(real.features.mean(axis=0) - twin.features.mean(axis=0))))
    var_gap = float(np.mean(np.abs(real.features.var(axis=0) - twin.features.var(axis=0))))
    return mean_gap, var_gap


def linear_mmd(real: Dataset, twin: Dataset) -> float:
    """Linear-kernel biased MMD^2: squared distance between feature means."""
    _check_dims(real, twin)
    diff = real.features.mean(axis=0) - twin.features.mean(axis=0)
    return float(diff @ diff)


def _wasserstein1(a: np.ndarray, b: np.ndarray) -> float:
    """1-D W1 between samples; unequal sizes use evenly spaced quantiles."""
    a = np.sort(a)
    b = np.sort(b)
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    m = max(a.size, b.size)
    q = (np.arange(m) + 0.5) / m
    return float(np.mean(np.abs(np.quantile(a, q) - np.quantile(b, q))))


def sliced_wasserstein(real: Dataset, twin: Dataset, num_projections: int = 64, seed: int = 0) -> float:
    """Mean 1-D Wasserstein-1 distance over seeded random unit directions."""
    _check_dims(real, twin)
    if real.n < 1 or twin.n < 1:
        raise InvalidInputError("both datasets must be nonempty")
    total = 0.0
    for i in range(num_projections):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i, 0x51D0]))
        u = rng.normal(size=real.d)
        u /= np.linalg.norm(u)
        total += _wasserstein1(real.features @ u, twin.features @ u)
    return total / num_projections


def pca2(real: Dataset, twin: Dataset) -> tuple[np.ndarray, np.ndarray, tuple[float, float]]:
    """Project both sets onto the top-2 principal directions of the pooled data.

    Returns (real 2-D points, twin 2-D points, explained-variance fractions).
    Components are sign-fixed so their first nonzero loading is positive.
    """
    _check_dims(real, twin)
    if real.d < 2:
        raise InvalidInputError("PCA projection needs at least 2 features")
    pooled = np.vstack([real.features, twin.features])
    center = pooled.mean(axis=0)
    pooled_c = pooled - center
    cov = pooled_c.T @ pooled_c / pooled.shape[0]  # population normalization
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    basis = eigvecs[:, order]
    for j in range(2):
        nz = np.flatnonzero(np.abs(basis[:, j]) > 1e-12)
        if nz.size and basis[nz[0], j] < 0:
            basis[:, j] = -basis[:, j]
    total_var = float(eigvals.sum())
    explained = tuple(float(eigvals[i] / total_var) if total_var > 0 else 0.0 for i in order)
    return (
        (real.features - center) @ basis,
        (twin.features - center) @ basis,
        explained,
    )


def alignment_report(real: Dataset, twin: Dataset, num_projections: int = 64, seed: int = 0) -> AlignmentReport:
    mean_gap, var_gap = moment_gaps(real, twin)
    proj_real, proj_twin, explained = pca2(real, twin)
    return AlignmentReport(
        n_real=real.n,
        n_twin=twin.n,
        d=real.d,
        mean_gap=mean_gap,
        var_gap=var_gap,
        mmd=linear_mmd(real, twin),
        swd=sliced_wasserstein(real, twin, num_projections, seed),
        explained_variance=explained,
        pca_real=proj_real,
        pca_twin=proj_twin,
    )
