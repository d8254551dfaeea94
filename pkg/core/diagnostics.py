"""
Kernel locality diagnostics.

Two views of how Gaussian-like kernels stop being local as the dimension
grows: the distribution of kernel matrix entries at a fitted length, and
the probability mass of a standard Gaussian inside a ball of given radius.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import gammainc, gammaincinv

from .kernels import KernelFamily, KernelSpec, as_points, design_matrix
from .utils import make_rng, write_csv, write_json

QUANTILE_LEVELS = (0.0, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0)
DEFAULT_BINS = 50

class DiagnosticsError(ValueError):
    pass

@dataclass(frozen=True)
class LocalityReport:
    """Histogram on [0, 1] and quantiles of one zeta block's kernel entries."""
    dimension: int
    length: float
    zeta_index: int
    n_entries: int
    histogram: Tuple[Tuple[float, float, int], ...]
    quantiles: Dict[float, float] = field(default_factory=dict)
    family: str = KernelFamily.SQUARED_EXPONENTIAL.value
    n_rows: int = 0
    n_centers: int = 0

    @property
    def minimum(self) -> float:
        return self.quantiles[0.0]

    @property
    def median(self) -> float:
        return self.quantiles[0.5]

    def histogram_rows(self) -> List[dict]:
        return [{"bin_lower": lo, "bin_upper": hi, "count": count} for lo, hi, count in self.histogram]

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "length": self.length,
            "zeta_index": self.zeta_index,
            "family": self.family,
            "n_rows": self.n_rows,
            "n_centers": self.n_centers,
            "n_entries": self.n_entries,
            "quantiles": [{"level": level, "value": value} for level, value in sorted(self.quantiles.items())],
            "histogram": self.histogram_rows(),
        }

    def save(self, stem: str | Path) -> Tuple[Path, Path]:
        """Write <stem>.csv (one row per bin) and <stem>.json (full record)."""
        stem = Path(stem)
        csv_path = write_csv(stem.with_suffix(".csv"), self.histogram_rows(),
                             columns=["bin_lower", "bin_upper", "count"])
        json_path = write_json(stem.with_suffix(".json"), self.to_dict())
        return csv_path, json_path

@dataclass(frozen=True)
class KernelExpectation:
    """Monte Carlo estimate of E[k(x, x')] next to its closed form."""
    dimension: int
    length: float
    estimate: float
    standard_error: float
    closed_form: float
    n_samples: int

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.estimate == self.closed_form else float("inf")
        return abs(self.estimate - self.closed_form) / self.standard_error

def kernel_entry_distribution(rows, centers, family: KernelFamily | str, l: float,
                              bins: int = DEFAULT_BINS, zeta_index: int = 0) -> LocalityReport:
    """Histogram and quantiles over all M*N entries of the single-length design matrix."""
    if int(bins) != bins or bins < 1:
        raise DiagnosticsError(f"Number of bins must be a positive integer, got {bins}")
    spec = KernelSpec.single(family, l)
    centers = as_points(centers, "centers")
    B = design_matrix(rows, centers, spec)
    entries = B.ravel()

    counts, edges = np.histogram(entries, bins=int(bins), range=(0.0, 1.0))
    histogram = tuple((float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts)))
    levels = np.asarray(QUANTILE_LEVELS)
    values = np.quantile(entries, levels, method="linear")

    return LocalityReport(
        dimension=int(centers.shape[1]),
        length=float(l),
        zeta_index=int(zeta_index),
        n_entries=int(entries.size),
        histogram=histogram,
        quantiles={float(q): float(v) for q, v in zip(levels, values)},
        family=spec.family.value,
        n_rows=int(B.shape[0]),
        n_centers=int(B.shape[1]),
    )

def _check_dimension(dimension: int) -> int:
    if int(dimension) != dimension or dimension < 1:
        raise DiagnosticsError(f"Dimension must be a positive integer, got {dimension}")
    return int(dimension)

def gaussian_mass_within(dimension: int, r: float) -> float:
    """P(|z| <= r) for z standard normal in D dimensions (chi-square CDF at r^2)."""
    dimension = _check_dimension(dimension)
    if not r >= 0.0:
        raise DiagnosticsError(f"Radius must be nonnegative, got {r}")
    if np.isinf(r):
        return 1.0
    return float(gammainc(0.5 * dimension, 0.5 * r * r))

def gaussian_radius_for_mass(dimension: int, mass: float) -> float:
    """Radius, in standard deviations, of the centered ball holding a given mass."""
    dimension = _check_dimension(dimension)
    if not 0.0 <= mass < 1.0:
        raise DiagnosticsError(f"Mass must lie in [0, 1), got {mass}")
    return float(np.sqrt(2.0 * gammaincinv(0.5 * dimension, mass)))

def expected_rbf_kernel(dimension: int, l: float) -> float:
    """E[exp(-|x - x'|^2 / 2l^2)] for independent standard normal x, x'."""
    dimension = _check_dimension(dimension)
    if not l > 0.0:
        raise DiagnosticsError(f"Kernel length must be positive, got {l}")
    if np.isinf(l):
        return 1.0
    return float((1.0 + 2.0 / (l * l)) ** (-0.5 * dimension))

def expected_kernel_under_standardization(dimension: int, l: float, n_samples: int = 100_000,
                                          seed: int = 0, chunk_size: int = 50_000) -> KernelExpectation:
    """Monte Carlo estimate of the mean RBF kernel value between standardized points."""
    closed_form = expected_rbf_kernel(dimension, l)
    if int(n_samples) != n_samples or n_samples < 2:
        raise DiagnosticsError(f"Need at least two samples, got {n_samples}")
    n_samples = int(n_samples)

    rng = make_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        n = min(chunk_size, n_samples - done)
        x = rng.standard_normal((n, dimension))
        y = rng.standard_normal((n, dimension))
        r2 = np.sum((x - y) ** 2, axis=1)
        values = np.exp(-r2 / (2.0 * l * l)) if np.isfinite(l) else np.ones(n)
        total += float(values.sum())
        total_sq += float(np.dot(values, values))
        done += n

    mean = total / n_samples
    variance = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return KernelExpectation(dimension, float(l), mean, float(np.sqrt(variance / n_samples)),
                             closed_form, n_samples)
