"""
Point sets consumed by the fits: ingestion, standardization, splits and a
synthetic potential surface.

All random draws use numpy's PCG64 generator (see core.utils.make_rng), so a
seed reproduces the same split on every platform.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .utils import validate_file, make_rng, write_csv

DEFAULT_BOX_HALFWIDTH = 1.5
MORSE_EXPONENT = 0.5
COUPLING_STRENGTH = 0.1

logger = logging.getLogger(__name__)

class DatasetError(ValueError):
    pass

class CSVFormatError(DatasetError):
    """Malformed CSV content; `line` is the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)

def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float, copy=True)
    values.setflags(write=False)
    return values

@dataclass(frozen=True)
class Dataset:
    """Inputs (n_total x D) with scalar targets in `target_unit`."""
    inputs: np.ndarray
    targets: np.ndarray
    target_unit: str = "cm^-1"
    input_names: Tuple[str, ...] = ()
    target_name: str = "energy"

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if inputs.ndim != 2 or inputs.shape[0] < 1 or inputs.shape[1] < 1:
            raise DatasetError(f"Inputs must be a nonempty n x D matrix, got shape {inputs.shape}")
        if targets.ndim != 1 or targets.shape[0] != inputs.shape[0]:
            raise DatasetError(f"Got {targets.shape} targets for {inputs.shape[0]} input rows")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise DatasetError("Dataset contains non-finite values")

        names = tuple(self.input_names) or tuple(f"x{i + 1}" for i in range(inputs.shape[1]))
        if len(names) != inputs.shape[1]:
            raise DatasetError(f"{len(names)} input names given for {inputs.shape[1]} columns")

        object.__setattr__(self, "inputs", _frozen(inputs))
        object.__setattr__(self, "targets", _frozen(targets))
        object.__setattr__(self, "input_names", names)

    @property
    def n_total(self) -> int:
        return self.inputs.shape[0]

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows at the given indices, in that order."""
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.inputs[indices], self.targets[indices], self.target_unit,
                       self.input_names, self.target_name)

    def with_inputs(self, inputs: np.ndarray) -> "Dataset":
        return Dataset(inputs, self.targets, self.target_unit, self.input_names, self.target_name)

@dataclass(frozen=True)
class Normalizer:
    """Per-column affine map to zero mean and unit variance."""
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        stds = np.atleast_1d(np.asarray(self.stds, dtype=float))
        if means.shape != stds.shape or means.ndim != 1:
            raise DatasetError(f"Normalizer means {means.shape} and stds {stds.shape} disagree")
        if not np.all(stds > 0.0):
            raise DatasetError("Normalizer standard deviations must be strictly positive")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "stds", _frozen(stds))

    @classmethod
    def identity(cls, dimension: int) -> "Normalizer":
        return cls(np.zeros(dimension), np.ones(dimension))

    @classmethod
    def fit(cls, inputs: np.ndarray, names: Optional[Sequence[str]] = None) -> "Normalizer":
        """Fit means and population standard deviations of each column."""
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[0] < 1:
            raise DatasetError(f"Cannot fit a normalizer to shape {inputs.shape}")
        means = inputs.mean(axis=0)
        stds = inputs.std(axis=0, ddof=0)
        for j, std in enumerate(stds):
            # Exact constants can leave round-off noise in the std
            if not std > 1e-12 * max(1.0, abs(means[j])):
                name = names[j] if names is not None else f"#{j + 1}"
                raise DatasetError(f"Input column {name} has zero variance and cannot be standardized")
        return cls(means, stds)

    @property
    def dimension(self) -> int:
        return self.means.shape[0]

    def apply(self, inputs) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(1, -1)
        if inputs.shape[-1] != self.dimension:
            raise DatasetError(f"Expected {self.dimension} input columns, got {inputs.shape[-1]}")
        return (inputs - self.means) / self.stds

    def invert(self, standardized) -> np.ndarray:
        standardized = np.asarray(standardized, dtype=float)
        return standardized * self.stds + self.means

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        return cls(np.asarray(data["means"]), np.asarray(data["stds"]))

@dataclass(frozen=True)
class SplitIndices:
    """Row indices of centers, training rows and test rows."""
    center_idx: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    disjoint_centers: bool = field(default=False)

    def __post_init__(self):
        for name in ("center_idx", "train_idx", "test_idx"):
            arr = np.array(getattr(self, name), dtype=np.int64, copy=True).reshape(-1)
            if np.unique(arr).size != arr.size:
                raise DatasetError(f"{name} contains duplicate indices")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise DatasetError("Training and test indices overlap")
        centers_in_train = np.isin(self.center_idx, self.train_idx).all()
        if not self.disjoint_centers and not centers_in_train:
            raise DatasetError("Centers must be a subset of the training indices")
        if self.disjoint_centers and np.intersect1d(self.center_idx, np.concatenate([self.train_idx, self.test_idx])).size:
            raise DatasetError("Disjoint centers overlap the training or test indices")

    @property
    def n_centers(self) -> int:
        return self.center_idx.size

    @property
    def n_train(self) -> int:
        return self.train_idx.size

    @property
    def n_test(self) -> int:
        return self.test_idx.size

def training_size(n_centers: int, m_ratio: float) -> int:
    """M = round(m_ratio * N), halves rounded up."""
    return int(np.floor(m_ratio * n_centers + 0.5))

def load_csv(path: str | Path, target_unit: str = "cm^-1") -> Dataset:
    """
    Load a dataset from CSV: a header of D input names plus one target
    name, then one numeric record per line.
    """
    validate_file(path)
    try:
        # The header is read as a data row so the field count is fixed by it
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False,
                            skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise CSVFormatError("file is empty (no header)", line=1)
    except pd.errors.ParserError as e:
        # pandas reports e.g. "Expected 3 fields in line 4, saw 4"
        raise CSVFormatError(f"ragged row: {str(e).strip()}")
    except UnicodeDecodeError as e:
        raise CSVFormatError(f"file is not valid UTF-8: {str(e)}")

    header = frame.iloc[0]
    if header.isna().any():
        raise CSVFormatError("header contains empty column names", line=1)
    columns = [str(c).strip() for c in header]
    frame = frame.iloc[1:]
    if len(columns) < 2:
        raise CSVFormatError("header must name at least one input and one target column", line=1)

    # Trailing blank lines are not records
    blank = (frame.isna() | (frame == "")).all(axis=1)
    while len(frame) and blank.iloc[len(frame) - 1]:
        frame = frame.iloc[:-1]
        blank = blank.iloc[:-1]
    if len(frame) == 0:
        raise CSVFormatError("zero data rows", line=2)

    values = np.empty(frame.shape, dtype=float)
    for row_pos, row in enumerate(frame.itertuples(index=False, name=None)):
        line = row_pos + 2
        for col_pos, cell in enumerate(row):
            if not isinstance(cell, str):
                raise CSVFormatError(f"ragged row: expected {len(columns)} fields", line=line)
            cell = cell.strip()
            if cell == "":
                raise CSVFormatError(f"missing cell in column '{columns[col_pos]}'", line=line)
            try:
                number = float(cell)
            except ValueError:
                number = np.nan
            if not np.isfinite(number):
                raise CSVFormatError(f"non-numeric cell '{cell}' in column '{columns[col_pos]}'", line=line)
            values[row_pos, col_pos] = number

    dataset = Dataset(values[:, :-1], values[:, -1], target_unit, tuple(columns[:-1]), columns[-1])
    logger.info(f"Loaded {dataset.n_total} rows in {dataset.dimension} dimensions from {path}")
    return dataset

def save_csv(dataset: Dataset, path: str | Path) -> Path:
    """Write a dataset in the format load_csv reads."""
    frame = pd.DataFrame(dataset.inputs, columns=list(dataset.input_names))
    frame[dataset.target_name] = dataset.targets
    return write_csv(path, frame)

def standardize(dataset: Dataset) -> Tuple[Dataset, Normalizer]:
    """Map every input column to mean 0 and population variance 1."""
    normalizer = Normalizer.fit(dataset.inputs, dataset.input_names)
    return dataset.with_inputs(normalizer.apply(dataset.inputs)), normalizer

def split(dataset: Dataset, n_centers: int, m_ratio: float = 1.4, test_size: Optional[int] = None,
          seed: int = 0, disjoint_centers: bool = False) -> SplitIndices:
    """
    Draw a seeded split of a dataset.

    M = round(m_ratio * N) training rows are drawn uniformly without
    replacement; the first N drawn are the basis centers. Test rows come
    from the remainder. A test_size of None takes every remaining row.
    With disjoint_centers the N centers are drawn first and the M training
    rows after them.
    """
    if int(n_centers) != n_centers or n_centers < 1:
        raise DatasetError(f"Number of centers must be a positive integer, got {n_centers}")
    if m_ratio < 1.0:
        raise DatasetError(f"m_ratio must be at least 1, got {m_ratio}")
    n_centers = int(n_centers)
    n_train = training_size(n_centers, m_ratio)
    n_drawn = n_train + (n_centers if disjoint_centers else 0)

    available = dataset.n_total - n_drawn
    if test_size is None:
        test_size = max(available, 0)
    if test_size < 0:
        raise DatasetError(f"test_size must be nonnegative, got {test_size}")
    if n_drawn + test_size > dataset.n_total:
        raise DatasetError(
            f"Insufficient rows: need {n_drawn + test_size} "
            f"({n_drawn} for fitting + {test_size} test) but the dataset has {dataset.n_total}"
        )

    order = make_rng(seed).permutation(dataset.n_total)
    if disjoint_centers:
        centers = order[:n_centers]
        train = order[n_centers:n_drawn]
    else:
        train = order[:n_train]
        centers = train[:n_centers]
    test = order[n_drawn:n_drawn + test_size]
    return SplitIndices(centers, train, test, seed, disjoint_centers)

def morse_coupled_potential(inputs) -> np.ndarray:
    """Sum of Morse-like terms plus weak bilinear couplings between coordinates."""
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    morse = np.sum((1.0 - np.exp(-MORSE_EXPONENT * x)) ** 2, axis=1)
    total = x.sum(axis=1)
    pair_sum = 0.5 * (total * total - np.sum(x * x, axis=1))
    return morse + COUPLING_STRENGTH * pair_sum

def synth_potential(dimension: int, n_points: int, seed: int = 0,
                    box_halfwidth: float = DEFAULT_BOX_HALFWIDTH) -> Dataset:
    """Uniform samples of morse_coupled_potential in a cube."""
    if int(dimension) != dimension or dimension < 1:
        raise DatasetError(f"Dimension must be a positive integer, got {dimension}")
    if int(n_points) != n_points or n_points < 1:
        raise DatasetError(f"Number of points must be a positive integer, got {n_points}")
    if not box_halfwidth > 0.0:
        raise DatasetError(f"Box halfwidth must be positive, got {box_halfwidth}")

    rng = make_rng(seed)
    inputs = rng.uniform(-box_halfwidth, box_halfwidth, size=(int(n_points), int(dimension)))
    return Dataset(inputs, morse_coupled_potential(inputs), "dimensionless",
                   tuple(f"x{i + 1}" for i in range(int(dimension))), "V")
