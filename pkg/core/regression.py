"""
Rectangular (pseudoinverse) and square (regularized) kernel regression.

A FitModel predicts f(x) = sum_z sum_n k(x, x_n | l_z) c_{z,n} on inputs
standardized with the model's normalizer.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import Normalizer
from .kernels import KernelFamily, KernelSpec, design_matrix, square_covariance_matrix
from .linalg import DEFAULT_RCOND, SolveReport, pseudoinverse_solve, regularized_solve
from .plugin_system.plugin_base import HookPoint
from .plugin_system.plugin_manager import fire_hook
from .utils import read_json, write_json

MODEL_FORMAT = "kernelzeta-fit-model"
MODEL_VERSION = 1

class RegressionError(ValueError):
    pass

@dataclass(frozen=True)
class FitModel:
    """A trained kernel expansion; immutable after fitting."""
    normalizer: Normalizer
    centers: np.ndarray
    spec: KernelSpec
    coefficients: np.ndarray
    solve_report: SolveReport

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float, copy=True)
        coefficients = np.array(self.coefficients, dtype=float, copy=True).reshape(-1)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise RegressionError(f"Centers must be an N x D matrix, got shape {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise RegressionError("Centers contain non-finite values")
        if centers.shape[1] != self.normalizer.dimension:
            raise RegressionError(f"Centers have D={centers.shape[1]}, normalizer has D={self.normalizer.dimension}")
        if coefficients.size != self.spec.n_zeta * centers.shape[0]:
            raise RegressionError(
                f"Expected {self.spec.n_zeta * centers.shape[0]} coefficients "
                f"({self.spec.n_zeta} zeta x {centers.shape[0]} centers), got {coefficients.size}"
            )
        centers.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def coefficient_blocks(self) -> np.ndarray:
        """Coefficients reshaped to (Z, N), one row per zeta length."""
        return self.coefficients.reshape(self.spec.n_zeta, self.n_centers)

    def predict(self, raw_inputs) -> np.ndarray:
        return predict(self, raw_inputs)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "normalizer": self.normalizer.to_dict(),
            "spec": self.spec.to_dict(),
            "centers": self.centers.tolist(),
            "coefficients": self.coefficients.tolist(),
            "solve_report": self.solve_report.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitModel":
        if data.get("format") != MODEL_FORMAT:
            raise RegressionError(f"Not a fit model document (format={data.get('format')!r})")
        if data.get("version") != MODEL_VERSION:
            raise RegressionError(f"Unsupported fit model version {data.get('version')}")
        return cls(
            normalizer=Normalizer.from_dict(data["normalizer"]),
            centers=np.asarray(data["centers"], dtype=float),
            spec=KernelSpec.from_dict(data["spec"]),
            coefficients=np.asarray(data["coefficients"], dtype=float),
            solve_report=SolveReport.from_dict(data["solve_report"]),
        )

@dataclass(frozen=True)
class Metrics:
    """Error metrics in target units; correlation_r is None when undefined."""
    rmse: float
    mae: float
    correlation_r: Optional[float]
    n_points: int

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "correlation_r": self.correlation_r,
            "correlation_defined": self.correlation_r is not None,
            "n_points": self.n_points,
        }

def _checked_rows(inputs, name: str) -> np.ndarray:
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise RegressionError(f"{name} must be a nonempty 2-D matrix, got shape {arr.shape}")
    return arr

def _checked_targets(targets, n_rows: int) -> np.ndarray:
    f = np.asarray(targets, dtype=float).reshape(-1)
    if f.size != n_rows:
        raise RegressionError(f"Got {f.size} targets for {n_rows} rows")
    return f

def predict(model: FitModel, raw_inputs) -> np.ndarray:
    """Predict at raw (unstandardized) inputs."""
    raw = np.asarray(raw_inputs, dtype=float)
    if raw.ndim == 1:
        raw = raw.reshape(1, -1)
    if raw.ndim != 2 or raw.shape[1] != model.dimension:
        raise RegressionError(f"Expected inputs with {model.dimension} columns, got shape {raw.shape}")
    if raw.shape[0] == 0:
        return np.zeros(0)
    B = design_matrix(model.normalizer.apply(raw), model.centers, model.spec)
    return B @ model.coefficients

def score(predictions, truth) -> Metrics:
    """RMSE, MAE and Pearson correlation of predictions against truth."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(truth, dtype=float).reshape(-1)
    if p.size != t.size:
        raise RegressionError(f"Got {p.size} predictions for {t.size} true values")
    if t.size == 0:
        raise RegressionError("Cannot score an empty set")

    errors = p - t
    rmse = float(np.sqrt(np.mean(errors * errors)))
    mae = float(np.mean(np.abs(errors)))

    correlation = None
    if t.size >= 2 and np.ptp(t) > 0.0 and np.ptp(p) > 0.0 and np.all(np.isfinite(p)):
        correlation = float(np.clip(np.corrcoef(p, t)[0, 1], -1.0, 1.0))
    return Metrics(rmse, mae, correlation, int(t.size))

def save_model(model: FitModel, path: str | Path) -> Path:
    """Write a model as JSON; floats use shortest round-trip repr."""
    return write_json(path, model.to_dict())

def load_model(path: str | Path) -> FitModel:
    return FitModel.from_dict(read_json(path))

class RegressionManager:
    """Fits kernel models with plugin support."""

    def __init__(self, plugin_manager=None):
        self.plugin_manager = plugin_manager
        self.logger = logging.getLogger('RegressionManager')
        # scans fit from worker threads; fit hook handlers still run one at a time
        self._hook_lock = threading.Lock()
        fire_hook(self.plugin_manager, HookPoint.REGRESSION_INIT, manager=self)

    def _fire_fit_hook(self, hook_point: HookPoint, **kwargs):
        with self._hook_lock:
            return fire_hook(self.plugin_manager, hook_point, **kwargs)

    def fit_rectangular(self, train_inputs, train_targets, center_rows, spec: KernelSpec,
                        rcond: float = DEFAULT_RCOND, normalizer: Optional[Normalizer] = None) -> FitModel:
        """
        Fit c = B+ f on standardized inputs with the multi-zeta design matrix.

        Args:
            train_inputs: M x D standardized training rows
            train_targets: M targets
            center_rows: N x D standardized basis centers
            spec: kernel family and zeta lengths
            rcond: relative singular value cutoff of the pseudoinverse
            normalizer: the map that produced the standardized inputs;
                identity when omitted
        """
        rows = _checked_rows(train_inputs, "Training inputs")
        centers = _checked_rows(center_rows, "Center rows")
        f = _checked_targets(train_targets, rows.shape[0])
        normalizer = normalizer or Normalizer.identity(rows.shape[1])

        self._fire_fit_hook(HookPoint.PRE_FIT, method="rectangular",
                            spec=spec, n_rows=rows.shape[0], n_centers=centers.shape[0])

        B = design_matrix(rows, centers, spec)
        coefficients, report = pseudoinverse_solve(B, f, rcond)
        model = FitModel(normalizer, centers, spec, coefficients, report)

        self.logger.debug(f"Rectangular fit {B.shape[0]}x{B.shape[1]} lengths={spec.lengths} "
                          f"rank={report.effective_rank} residual={report.residual_norm:.3e}")
        self._fire_fit_hook(HookPoint.POST_FIT, method="rectangular", model=model)
        return model

    def fit_square_gpr(self, inputs, targets, family: KernelFamily | str, l: float, delta: float = 0.0,
                       normalizer: Optional[Normalizer] = None) -> FitModel:
        """Fit c = K^-1 f with K the square covariance matrix plus delta on its diagonal."""
        rows = _checked_rows(inputs, "Inputs")
        f = _checked_targets(targets, rows.shape[0])
        normalizer = normalizer or Normalizer.identity(rows.shape[1])
        spec = KernelSpec.single(family, l)

        self._fire_fit_hook(HookPoint.PRE_FIT, method="square",
                            spec=spec, n_rows=rows.shape[0], n_centers=rows.shape[0])

        K = square_covariance_matrix(rows, spec.family, l, delta)
        coefficients = regularized_solve(K, f)

        # K is symmetric positive definite, so its eigenvalues are its singular values
        eigenvalues = np.linalg.eigvalsh(K)
        report = SolveReport(
            effective_rank=rows.shape[0],
            max_singular_value=float(eigenvalues[-1]),
            min_kept_singular_value=float(eigenvalues[0]),
            residual_norm=float(np.linalg.norm(K @ coefficients - f)),
        )
        model = FitModel(normalizer, rows, spec, coefficients, report)
        self._fire_fit_hook(HookPoint.POST_FIT, method="square", model=model)
        return model

# Global manager instance
regression_manager = None

def init_regression_manager(plugin_manager=None):
    """Initialize the global regression manager."""
    global regression_manager
    regression_manager = RegressionManager(plugin_manager)
    return regression_manager

def fit_rectangular(train_inputs, train_targets, center_rows, spec: KernelSpec,
                    rcond: float = DEFAULT_RCOND, normalizer: Optional[Normalizer] = None) -> FitModel:
    """Global rectangular fit function."""
    if not regression_manager:
        raise RuntimeError("Regression manager not initialized")
    return regression_manager.fit_rectangular(train_inputs, train_targets, center_rows, spec, rcond, normalizer)

def fit_square_gpr(inputs, targets, family: KernelFamily | str, l: float, delta: float = 0.0,
                   normalizer: Optional[Normalizer] = None) -> FitModel:
    """Global square GPR fit function."""
    if not regression_manager:
        raise RuntimeError("Regression manager not initialized")
    return regression_manager.fit_square_gpr(inputs, targets, family, l, delta, normalizer)
