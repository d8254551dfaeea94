"""
Matern-family kernels and multi-zeta design matrices.

Every kernel has unit prefactor, so k(x, x) = 1. A KernelSpec carries one
length per zeta component; the design matrix gets one column block of
N center columns per length, left to right in increasing length order.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)

class KernelError(ValueError):
    pass

class KernelFamily(Enum):
    """Closed-form members of the Matern family."""
    SQUARED_EXPONENTIAL = "squared_exponential"  # nu -> infinity
    EXPONENTIAL = "exponential"                  # nu = 1/2
    MATERN32 = "matern32"                        # nu = 3/2
    MATERN52 = "matern52"                        # nu = 5/2

    @classmethod
    def from_name(cls, name: str | "KernelFamily") -> "KernelFamily":
        """Resolve a family from its value or a common alias."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "rbf": cls.SQUARED_EXPONENTIAL,
            "se": cls.SQUARED_EXPONENTIAL,
            "gaussian": cls.SQUARED_EXPONENTIAL,
            "matern12": cls.EXPONENTIAL,
            "laplacian": cls.EXPONENTIAL,
            "matern_32": cls.MATERN32,
            "matern_52": cls.MATERN52,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            known = ", ".join(f.value for f in cls)
            raise KernelError(f"Unknown kernel family '{name}' (expected one of: {known})")

@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus the ordered zeta lengths."""
    family: KernelFamily
    lengths: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily.from_name(self.family))
        lengths = tuple(float(l) for l in self.lengths)
        if not lengths:
            raise KernelError("A kernel spec needs at least one length")
        for l in lengths:
            if not np.isfinite(l) or l <= 0.0:
                raise KernelError(f"Kernel lengths must be finite and positive, got {l}")
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise KernelError(f"Kernel lengths must be strictly increasing, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def single(cls, family: KernelFamily | str, l: float) -> "KernelSpec":
        return cls(KernelFamily.from_name(family), (l,))

    @classmethod
    def multi_zeta(cls, family: KernelFamily | str, l: float, ratios: Iterable[float] = (1.5,)) -> "KernelSpec":
        """Lengths (l, r1*l, r2*l, ...); ratios must exceed 1 and increase."""
        return cls(KernelFamily.from_name(family), (l,) + tuple(r * l for r in ratios))

    @property
    def n_zeta(self) -> int:
        return len(self.lengths)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "lengths": list(self.lengths)}

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(KernelFamily.from_name(data["family"]), tuple(data["lengths"]))

def as_points(points, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise KernelError(f"{name} must be a 2-D array of points, got shape {arr.shape}")
    return arr

def squared_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Squared Euclidean distance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise KernelError(f"Dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(np.dot(diff, diff))

def pairwise_squared_distances(rows, centers) -> np.ndarray:
    """M x N matrix of squared distances between rows and centers."""
    rows = as_points(rows, "rows")
    centers = as_points(centers, "centers")
    if rows.shape[1] != centers.shape[1]:
        raise KernelError(f"Dimension mismatch: rows have D={rows.shape[1]}, centers have D={centers.shape[1]}")
    return cdist(rows, centers, metric="sqeuclidean")

def kernel_value(family: KernelFamily | str, l: float, r2):
    """Evaluate a unit-prefactor kernel at squared distance(s) r2."""
    family = KernelFamily.from_name(family)
    if not np.isfinite(l) or l <= 0.0:
        raise KernelError(f"Kernel length must be positive, got {l}")
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0.0):
        raise KernelError("Squared distances must be nonnegative")

    if family is KernelFamily.SQUARED_EXPONENTIAL:
        value = np.exp(-r2 / (2.0 * l * l))
    else:
        s = np.sqrt(r2) / l
        if family is KernelFamily.EXPONENTIAL:
            value = np.exp(-s)
        elif family is KernelFamily.MATERN32:
            value = (1.0 + SQRT3 * s) * np.exp(-SQRT3 * s)
        else:
            value = (1.0 + SQRT5 * s + 5.0 * r2 / (3.0 * l * l)) * np.exp(-SQRT5 * s)

    return float(value) if value.ndim == 0 else value

def design_matrix(rows, centers, spec: KernelSpec) -> np.ndarray:
    """Multi-zeta design matrix of shape M x (Z*N)."""
    centers = as_points(centers, "centers")
    if centers.shape[0] == 0:
        raise KernelError("At least one center is required")
    r2 = pairwise_squared_distances(rows, centers)
    blocks = [kernel_value(spec.family, l, r2) for l in spec.lengths]
    return blocks[0] if len(blocks) == 1 else np.hstack(blocks)

def square_covariance_matrix(points, family: KernelFamily | str, l: float, delta: float = 0.0) -> np.ndarray:
    """Square kernel matrix over points with delta added on the diagonal."""
    if not np.isfinite(delta) or delta < 0.0:
        raise KernelError(f"Regularization delta must be nonnegative, got {delta}")
    K = design_matrix(points, points, KernelSpec.single(family, l))
    K[np.diag_indices_from(K)] += delta
    return K
