"""
Least-squares solvers for the rectangular and square kernel systems.
"""
import logging
from dataclasses import dataclass, asdict
from typing import Tuple

import numpy as np
import scipy.linalg

DEFAULT_RCOND = 1e-10

logger = logging.getLogger(__name__)

class SolveError(ValueError):
    pass

@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of one linear solve."""
    effective_rank: int
    max_singular_value: float
    min_kept_singular_value: float
    residual_norm: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SolveReport":
        return cls(
            effective_rank=int(data["effective_rank"]),
            max_singular_value=float(data["max_singular_value"]),
            min_kept_singular_value=float(data["min_kept_singular_value"]),
            residual_norm=float(data["residual_norm"]),
        )

def _check_system(B: np.ndarray, f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    B = np.asarray(B, dtype=float)
    f = np.asarray(f, dtype=float)
    if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < 1:
        raise SolveError(f"Expected a nonempty 2-D matrix, got shape {B.shape}")
    if f.ndim != 1 or f.shape[0] != B.shape[0]:
        raise SolveError(f"Right-hand side of length {f.shape} does not match {B.shape[0]} rows")
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(f))):
        raise SolveError("Matrix or right-hand side contains non-finite entries")
    return B, f

def pseudoinverse_solve(B, f, rcond: float = DEFAULT_RCOND) -> Tuple[np.ndarray, SolveReport]:
    """
    Minimum-norm least-squares solution c = B+ f via SVD.

    Singular values at or below rcond * sigma_max are treated as zero.

    Args:
        B: M x P matrix
        f: M-vector
        rcond: relative singular value cutoff in (0, 1)

    Returns:
        The P-vector of coefficients and a SolveReport.
    """
    if not 0.0 < rcond < 1.0:
        raise SolveError(f"rcond must lie in (0, 1), got {rcond}")
    B, f = _check_system(B, f)

    U, s, Vt = scipy.linalg.svd(B, full_matrices=False, check_finite=False)
    sigma_max = float(s[0]) if s.size else 0.0
    keep = s > rcond * sigma_max
    rank = int(np.count_nonzero(keep))

    if rank == 0:
        c = np.zeros(B.shape[1])
        return c, SolveReport(0, sigma_max, 0.0, float(np.linalg.norm(f)))

    c = Vt[keep].T @ ((U[:, keep].T @ f) / s[keep])
    residual = float(np.linalg.norm(B @ c - f))
    return c, SolveReport(rank, sigma_max, float(s[keep][-1]), residual)

def regularized_solve(K, f) -> np.ndarray:
    """Solve K c = f for a symmetric positive definite K by Cholesky."""
    K, f = _check_system(K, f)
    if K.shape[0] != K.shape[1]:
        raise SolveError(f"Expected a square matrix, got shape {K.shape}")

    try:
        factor = scipy.linalg.cho_factor(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SolveError(
            f"Covariance matrix is not positive definite ({str(e)}); increase the regularization delta"
        )
    c = scipy.linalg.cho_solve(factor, f, check_finite=False)

    f_norm = float(np.linalg.norm(f))
    residual = float(np.linalg.norm(K @ c - f))
    if residual > 1e-8 * max(f_norm, np.finfo(float).tiny):
        logger.warning(f"Regularized solve residual {residual:.3e} exceeds 1e-8 of |f|={f_norm:.3e}; "
                       f"the covariance matrix is ill-conditioned, consider a larger delta")
    return c
