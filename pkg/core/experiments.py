"""
Config-driven experiments: length scans, locality reports and correlation data.

Every run draws one seeded split that all kernel variants and lengths share,
so single- and multi-zeta fits see the same centers and training rows.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import (DEFAULT_BOX_HALFWIDTH, Dataset, Normalizer, SplitIndices, load_csv, split,
                      synth_potential)
from .diagnostics import DEFAULT_BINS, LocalityReport, kernel_entry_distribution
from .kernels import KernelFamily, KernelSpec
from .linalg import DEFAULT_RCOND
from .plugin_system.plugin_base import HookPoint
from .plugin_system.plugin_manager import fire_hook
from .regression import FitModel, Metrics, RegressionManager, score
from .utils import derive_seed, read_json, to_jsonable, write_csv, write_json

SCAN_TABLE = "scan.csv"
SCAN_SUMMARY = "scan_summary.json"
LOCALITY_SUMMARY = "locality_summary.json"
SINGLE_ZETA = "single_zeta"

SCAN_COLUMNS = [
    "n_centers", "n_train", "n_test", "variant", "l", "run", "split_seed",
    "train_rmse", "test_rmse", "test_mae", "test_r", "effective_rank", "status", "message",
]

class ConfigError(ValueError):
    pass

def _ratio_label(ratio: float) -> str:
    return f"x{ratio:g}"

@dataclass(frozen=True)
class ZetaVariant:
    """A kernel variant: the first length l plus ratio multiples of it."""
    ratios: Tuple[float, ...] = ()

    @property
    def name(self) -> str:
        if not self.ratios:
            return SINGLE_ZETA
        prefix = "double_zeta" if len(self.ratios) == 1 else "multi_zeta"
        return "_".join([prefix] + [_ratio_label(r) for r in self.ratios])

    def spec(self, family: KernelFamily, l: float) -> KernelSpec:
        return KernelSpec.multi_zeta(family, l, self.ratios)

@dataclass(frozen=True)
class DataSource:
    """Either a CSV file or a synthetic surface."""
    csv_path: Optional[Path] = None
    target_unit: str = "cm^-1"
    synthetic_dimension: Optional[int] = None
    synthetic_points: Optional[int] = None
    box_halfwidth: float = DEFAULT_BOX_HALFWIDTH
    data_seed: Optional[int] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[Path] = None) -> "DataSource":
        if not isinstance(data, dict):
            raise ConfigError("'data' must be an object with a 'csv' or 'synthetic' entry")
        if ("csv" in data) == ("synthetic" in data):
            raise ConfigError("'data' needs exactly one of 'csv' or 'synthetic'")
        if "csv" in data:
            path = Path(data["csv"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return cls(csv_path=path, target_unit=str(data.get("target_unit", "cm^-1")))

        synthetic = data["synthetic"]
        try:
            return cls(
                synthetic_dimension=int(synthetic["dimension"]),
                synthetic_points=int(synthetic["n_points"]),
                box_halfwidth=float(synthetic.get("box_halfwidth", DEFAULT_BOX_HALFWIDTH)),
                data_seed=None if synthetic.get("seed") is None else int(synthetic["seed"]),
                target_unit="dimensionless",
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid synthetic data source: {str(e)}")

    @property
    def is_synthetic(self) -> bool:
        return self.csv_path is None

    def load(self, seed: int) -> Dataset:
        if self.is_synthetic:
            data_seed = self.data_seed if self.data_seed is not None else derive_seed(seed, 0)
            return synth_potential(self.synthetic_dimension, self.synthetic_points, data_seed, self.box_halfwidth)
        return load_csv(self.csv_path, self.target_unit)

    def to_dict(self) -> dict:
        if self.is_synthetic:
            return {"synthetic": {
                "dimension": self.synthetic_dimension,
                "n_points": self.synthetic_points,
                "box_halfwidth": self.box_halfwidth,
                "seed": self.data_seed,
            }}
        return {"csv": self.csv_path.as_posix(), "target_unit": self.target_unit}

@dataclass(frozen=True)
class LengthGrid:
    """
    Explicit length values, or a (min, max, count) range; defaults scale with sqrt(D).

    A range grid may be extended upward, `extension_steps` lengths at a time
    and at most `extensions` times, while a best length sits on its largest
    value. Explicit value lists are scanned as given.
    """
    values: Optional[Tuple[float, ...]] = None
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    count: int = 20
    geometric: bool = True
    extensions: int = 8
    extension_steps: int = 5

    @classmethod
    def from_config(cls, data: Any) -> "LengthGrid":
        if data is None:
            return cls()
        if isinstance(data, (list, tuple)):
            return cls(values=tuple(float(v) for v in data))
        if isinstance(data, dict):
            try:
                return cls(
                    minimum=None if data.get("min") is None else float(data["min"]),
                    maximum=None if data.get("max") is None else float(data["max"]),
                    count=int(data.get("count", 20)),
                    geometric=bool(data.get("geometric", True)),
                    extensions=int(data.get("extensions", 8)),
                    extension_steps=int(data.get("extension_steps", 5)),
                )
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid l_grid: {str(e)}")
        raise ConfigError("l_grid must be a list of lengths or an object with min/max/count")

    @property
    def extendable(self) -> bool:
        return self.values is None and self.extensions > 0

    def extend(self, grid: np.ndarray) -> np.ndarray:
        """The next `extension_steps` lengths past grid[-1], keeping the grid's spacing."""
        steps = np.arange(1, self.extension_steps + 1, dtype=float)
        if self.geometric:
            ratio = grid[-1] / grid[-2] if grid.size > 1 else 2.0
            return grid[-1] * ratio ** steps
        step = grid[-1] - grid[-2] if grid.size > 1 else grid[-1]
        return grid[-1] + step * steps

    def resolve(self, dimension: int) -> np.ndarray:
        if self.values is not None:
            grid = np.asarray(self.values, dtype=float)
        else:
            scale = math.sqrt(dimension)
            lo = self.minimum if self.minimum is not None else 0.25 * scale
            hi = self.maximum if self.maximum is not None else 8.0 * scale
            if self.count < 1:
                raise ConfigError(f"l_grid count must be positive, got {self.count}")
            if self.extensions < 0 or self.extension_steps < 1:
                raise ConfigError(f"l_grid extensions must be nonnegative and extension_steps positive, "
                                  f"got {self.extensions} and {self.extension_steps}")
            if self.count == 1:
                grid = np.array([lo])
            elif self.geometric:
                if lo <= 0.0:
                    raise ConfigError("A geometric l_grid needs a positive minimum")
                grid = np.geomspace(lo, hi, self.count)
            else:
                grid = np.linspace(lo, hi, self.count)

        if grid.size == 0:
            raise ConfigError("l_grid is empty")
        if not np.all(np.isfinite(grid)) or np.any(grid <= 0.0):
            raise ConfigError("l_grid values must be positive")
        if np.any(np.diff(grid) <= 0.0):
            raise ConfigError("l_grid values must be strictly increasing")
        return grid

    def to_dict(self) -> Any:
        if self.values is not None:
            return list(self.values)
        return {"min": self.minimum, "max": self.maximum, "count": self.count, "geometric": self.geometric,
                "extensions": self.extensions, "extension_steps": self.extension_steps}

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a scan, locality or correlation run needs."""
    data: DataSource
    n_centers: Tuple[int, ...]
    seed: int
    m_ratio: float = 1.4
    test_size: Optional[int] = None
    family: KernelFamily = KernelFamily.SQUARED_EXPONENTIAL
    l_grid: LengthGrid = field(default_factory=LengthGrid)
    zeta_ratios: Tuple[float, ...] = (1.5,)
    multi_zeta: Tuple[Tuple[float, ...], ...] = ()
    runs: int = 3
    rcond: float = DEFAULT_RCOND
    histogram_bins: int = DEFAULT_BINS
    disjoint_centers: bool = False
    workers: int = 1
    output_dir: Path = Path("results")

    def __post_init__(self):
        n_centers = self.n_centers
        if isinstance(n_centers, (int, np.integer)):
            n_centers = (n_centers,)
        object.__setattr__(self, "n_centers", tuple(int(n) for n in n_centers))
        object.__setattr__(self, "family", KernelFamily.from_name(self.family))
        object.__setattr__(self, "zeta_ratios", tuple(float(r) for r in self.zeta_ratios))
        object.__setattr__(self, "multi_zeta", tuple(tuple(float(r) for r in rs) for rs in self.multi_zeta))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        self.validate()

    def validate(self) -> None:
        if not self.n_centers or any(n < 1 for n in self.n_centers):
            raise ConfigError("n_centers must be one or more positive integers")
        if not self.m_ratio >= 1.0:
            raise ConfigError(f"m_ratio must be at least 1, got {self.m_ratio}")
        if self.test_size is not None and self.test_size < 0:
            raise ConfigError(f"test_size must be nonnegative, got {self.test_size}")
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}")
        if any(not r > 1.0 for r in self.zeta_ratios):
            raise ConfigError(f"zeta_ratios must all exceed 1, got {list(self.zeta_ratios)}")
        for ratios in self.multi_zeta:
            if not ratios or ratios[0] <= 1.0 or any(b <= a for a, b in zip(ratios, ratios[1:])):
                raise ConfigError(f"multi_zeta ratio sets must exceed 1 and increase, got {list(ratios)}")
        if not 0.0 < self.rcond < 1.0:
            raise ConfigError(f"rcond must lie in (0, 1), got {self.rcond}")
        if self.histogram_bins < 1:
            raise ConfigError(f"histogram_bins must be positive, got {self.histogram_bins}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.l_grid.values is not None:
            self.l_grid.resolve(1)

    @property
    def variants(self) -> List[ZetaVariant]:
        variants = [ZetaVariant()]
        variants += [ZetaVariant((r,)) for r in self.zeta_ratios]
        variants += [ZetaVariant(rs) for rs in self.multi_zeta]
        unique = []
        for variant in variants:
            if variant not in unique:
                unique.append(variant)
        return unique

    def variant(self, name: str) -> ZetaVariant:
        for variant in self.variants:
            if variant.name == name:
                return variant
        known = ", ".join(v.name for v in self.variants)
        raise ConfigError(f"Unknown variant '{name}' (configured: {known})")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None,
                  base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """
        Build a config from its JSON form. `defaults` is the numerics
        settings section and fills keys the document leaves out.
        """
        defaults = defaults or {}
        if not isinstance(data, dict):
            raise ConfigError("Experiment config must be a JSON object")
        known = {"data", "n_centers", "seed", "m_ratio", "test_size", "kernel", "l_grid", "zeta_ratios",
                 "multi_zeta", "runs", "rcond", "histogram_bins", "disjoint_centers", "workers", "output_dir"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        for required in ("data", "n_centers", "seed"):
            if data.get(required) is None:
                raise ConfigError(f"Config is missing required key '{required}'")

        default_ratio = defaults.get("zeta_ratio", 1.5)
        try:
            output_dir = Path(data.get("output_dir", "results"))
            if base_dir is not None and not output_dir.is_absolute():
                output_dir = base_dir / output_dir
            return cls(
                data=DataSource.from_dict(data["data"], base_dir),
                n_centers=data["n_centers"],
                seed=int(data["seed"]),
                m_ratio=float(data.get("m_ratio", defaults.get("m_ratio", 1.4))),
                test_size=None if data.get("test_size") is None else int(data["test_size"]),
                family=KernelFamily.from_name(data.get("kernel", KernelFamily.SQUARED_EXPONENTIAL)),
                l_grid=LengthGrid.from_config(data.get("l_grid")),
                zeta_ratios=tuple(data.get("zeta_ratios", [default_ratio])),
                multi_zeta=tuple(tuple(rs) for rs in data.get("multi_zeta", [])),
                runs=int(data.get("runs", defaults.get("runs", 3))),
                rcond=float(data.get("rcond", defaults.get("rcond", DEFAULT_RCOND))),
                histogram_bins=int(data.get("histogram_bins", defaults.get("histogram_bins", DEFAULT_BINS))),
                disjoint_centers=bool(data.get("disjoint_centers", False)),
                workers=int(data.get("workers", defaults.get("workers", 1))),
                output_dir=output_dir,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid experiment config: {str(e)}")

    @classmethod
    def from_file(cls, path: str | Path, defaults: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = read_json(path)
        except ValueError as e:
            raise ConfigError(f"Cannot parse config {path}: {str(e)}")
        return cls.from_dict(data, defaults, base_dir=path.parent)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with the non-None overrides applied (CLI flags)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        """JSON form, minus output_dir so results do not depend on where they are written."""
        return {
            "data": self.data.to_dict(),
            "n_centers": list(self.n_centers),
            "seed": self.seed,
            "m_ratio": self.m_ratio,
            "test_size": self.test_size,
            "kernel": self.family.value,
            "l_grid": self.l_grid.to_dict(),
            "zeta_ratios": list(self.zeta_ratios),
            "multi_zeta": [list(rs) for rs in self.multi_zeta],
            "runs": self.runs,
            "rcond": self.rcond,
            "histogram_bins": self.histogram_bins,
            "disjoint_centers": self.disjoint_centers,
        }

@dataclass(frozen=True)
class PreparedSplit:
    """One seeded split with its standardized arrays."""
    n_centers: int
    run: int
    split: SplitIndices
    normalizer: Normalizer
    train_raw: np.ndarray
    train_inputs: np.ndarray
    train_targets: np.ndarray
    center_inputs: np.ndarray
    test_raw: np.ndarray
    test_targets: np.ndarray

@dataclass(frozen=True)
class ScanCell:
    """One (N, variant, l, run) fit."""
    n_centers: int
    n_train: int
    n_test: int
    variant: str
    l: float
    run: int
    split_seed: int
    train_rmse: float = math.nan
    test_rmse: float = math.nan
    test_mae: float = math.nan
    test_r: Optional[float] = None
    effective_rank: int = 0
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_row(self) -> dict:
        return {name: getattr(self, name) for name in SCAN_COLUMNS}

@dataclass(frozen=True)
class BestLength:
    """Length with the lowest mean test rmse over runs for one (N, variant)."""
    n_centers: int
    variant: str
    l: float
    mean_test_rmse: float
    run_test_rmse: Tuple[float, ...]
    # smallest or largest scanned length; the true optimum may lie outside the grid
    at_grid_edge: bool = False

    def to_dict(self) -> dict:
        return {
            "n_centers": self.n_centers,
            "variant": self.variant,
            "l": self.l,
            "mean_test_rmse": self.mean_test_rmse,
            "run_test_rmse": list(self.run_test_rmse),
            "at_grid_edge": self.at_grid_edge,
        }

def select_best_lengths(cells: Iterable[ScanCell]) -> List[BestLength]:
    """
    Pick, per (N, variant), the length minimizing the mean test rmse over runs.

    Lengths with a failed or non-finite run are not eligible; ties go to the
    smaller length. A choice equal to the smallest or largest scanned length
    is marked at_grid_edge.
    """
    grouped: Dict[Tuple[int, str], Dict[float, List[float]]] = {}
    order: List[Tuple[int, str]] = []
    for cell in cells:
        key = (cell.n_centers, cell.variant)
        if key not in grouped:
            grouped[key] = {}
            order.append(key)
        value = cell.test_rmse if cell.ok and cell.n_test > 0 else math.nan
        grouped[key].setdefault(cell.l, []).append(value)

    best = []
    for key in order:
        chosen = None
        lengths = sorted(grouped[key])
        for l in lengths:
            values = grouped[key][l]
            if not all(math.isfinite(v) for v in values):
                continue
            mean = float(np.mean(values))
            if chosen is None or mean < chosen.mean_test_rmse:
                chosen = BestLength(key[0], key[1], l, mean, tuple(values))
        if chosen is not None:
            best.append(replace(chosen, at_grid_edge=chosen.l in (lengths[0], lengths[-1])))
    return best

@dataclass
class ScanResult:
    """All scan cells plus the selected best lengths."""
    cells: List[ScanCell]
    best: List[BestLength]
    l_grid: Tuple[float, ...]
    dimension: int
    target_unit: str

    def best_for(self, variant: str = SINGLE_ZETA, n_centers: Optional[int] = None) -> Optional[BestLength]:
        for entry in self.best:
            if entry.variant == variant and (n_centers is None or entry.n_centers == n_centers):
                return entry
        return None

    def cells_for(self, variant: str) -> List[ScanCell]:
        return [cell for cell in self.cells if cell.variant == variant]

    def nesting_violations(self, tolerance: float = 1e-8) -> List[Tuple[ScanCell, ScanCell]]:
        """
        Pairs where a multi-zeta training rmse exceeds the single-zeta one
        at the same (N, l, run) by more than tolerance. The single-zeta
        basis is a subset of every multi-zeta basis, so this should be empty.
        """
        single = {(c.n_centers, c.l, c.run): c for c in self.cells_for(SINGLE_ZETA) if c.ok}
        violations = []
        for cell in self.cells:
            if cell.variant == SINGLE_ZETA or not cell.ok:
                continue
            reference = single.get((cell.n_centers, cell.l, cell.run))
            if reference is not None and cell.train_rmse > reference.train_rmse + tolerance:
                violations.append((cell, reference))
        return violations

    def summary(self, config: ExperimentConfig) -> dict:
        return {
            "config": config.to_dict(),
            "dimension": self.dimension,
            "target_unit": self.target_unit,
            "l_grid": list(self.l_grid),
            "variants": [v.name for v in config.variants],
            "best": [entry.to_dict() for entry in self.best],
            "n_cells": len(self.cells),
            "n_failed_cells": sum(1 for cell in self.cells if not cell.ok),
        }

def _fit_error_message(error: Exception) -> str:
    return f"{type(error).__name__}: {str(error)}"

class ExperimentRunner:
    """Runs scans, locality reports and correlation exports with plugin support."""

    def __init__(self, plugin_manager=None, regression: Optional[RegressionManager] = None):
        self.plugin_manager = plugin_manager
        self.regression = regression or RegressionManager(plugin_manager)
        self.logger = logging.getLogger('ExperimentRunner')
        self._datasets: Dict[Tuple[DataSource, int], Dataset] = {}
        fire_hook(self.plugin_manager, HookPoint.EXPERIMENT_INIT, manager=self)

    def load_dataset(self, config: ExperimentConfig) -> Dataset:
        key = (config.data, config.seed)
        if key not in self._datasets:
            dataset = config.data.load(config.seed)
            self._datasets[key] = dataset
            fire_hook(self.plugin_manager, HookPoint.DATASET_LOADED, dataset=dataset)
        return self._datasets[key]

    def prepare_split(self, dataset: Dataset, config: ExperimentConfig, n_centers: int, run: int) -> PreparedSplit:
        """Draw the split for (N, run) and standardize on its training rows."""
        split_seed = derive_seed(config.seed, n_centers, run)
        indices = split(dataset, n_centers, config.m_ratio, config.test_size, split_seed,
                        config.disjoint_centers)

        train_raw = dataset.inputs[indices.train_idx]
        if train_raw.shape[0] == 1:
            self.logger.warning("Only one training row; skipping standardization")
            normalizer = Normalizer.identity(dataset.dimension)
        else:
            normalizer = Normalizer.fit(train_raw, dataset.input_names)

        return PreparedSplit(
            n_centers=n_centers,
            run=run,
            split=indices,
            normalizer=normalizer,
            train_raw=train_raw,
            train_inputs=normalizer.apply(train_raw),
            train_targets=dataset.targets[indices.train_idx],
            center_inputs=normalizer.apply(dataset.inputs[indices.center_idx]),
            test_raw=dataset.inputs[indices.test_idx],
            test_targets=dataset.targets[indices.test_idx],
        )

    def fit_variant(self, prepared: PreparedSplit, variant: ZetaVariant, l: float,
                    config: ExperimentConfig) -> FitModel:
        return self.regression.fit_rectangular(prepared.train_inputs, prepared.train_targets,
                                               prepared.center_inputs, variant.spec(config.family, l),
                                               config.rcond, prepared.normalizer)

    def _run_cell(self, job: Tuple[PreparedSplit, ZetaVariant, float, ExperimentConfig]) -> ScanCell:
        prepared, variant, l, config = job
        base = dict(
            n_centers=prepared.n_centers,
            n_train=prepared.split.n_train,
            n_test=prepared.split.n_test,
            variant=variant.name,
            l=float(l),
            run=prepared.run,
            split_seed=prepared.split.seed,
        )
        try:
            model = self.fit_variant(prepared, variant, l, config)
            train = score(model.predict(prepared.train_raw), prepared.train_targets)
            test: Optional[Metrics] = None
            if prepared.split.n_test:
                test = score(model.predict(prepared.test_raw), prepared.test_targets)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            self.logger.warning(f"Fit failed for {variant.name} l={l:g} run={prepared.run}: {str(e)}")
            return ScanCell(**base, status="failed", message=_fit_error_message(e))

        finite = math.isfinite(train.rmse) and (test is None or math.isfinite(test.rmse))
        return ScanCell(
            **base,
            train_rmse=train.rmse,
            test_rmse=test.rmse if test else math.nan,
            test_mae=test.mae if test else math.nan,
            test_r=test.correlation_r if test else None,
            effective_rank=model.solve_report.effective_rank,
            status="ok" if finite else "nonfinite",
        )

    def _map(self, jobs: Sequence, workers: int) -> List[ScanCell]:
        # Results come back in job order, so parallel runs write the same bytes
        if workers <= 1 or len(jobs) <= 1:
            return [self._run_cell(job) for job in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self._run_cell, jobs))

    def run_scan(self, config: ExperimentConfig, write: bool = True) -> ScanResult:
        """Fit every (N, run, variant, l) cell and select the best length per variant."""
        dataset = self.load_dataset(config)
        grid = config.l_grid.resolve(dataset.dimension)
        variants = config.variants

        fire_hook(self.plugin_manager, HookPoint.PRE_SCAN, config=config, l_grid=grid)

        splits = [self.prepare_split(dataset, config, n_centers, run)
                  for n_centers in config.n_centers for run in range(config.runs)]

        def jobs_for(lengths: np.ndarray) -> list:
            return [(prepared, variant, float(l), config)
                    for prepared in splits for variant in variants for l in lengths]

        self.logger.info(f"Scanning {len(splits) * len(variants) * grid.size} cells: N={list(config.n_centers)} "
                         f"runs={config.runs} variants={[v.name for v in variants]} lengths={grid.size}")
        cells = self._map(jobs_for(grid), config.workers)

        extensions = 0
        while config.l_grid.extendable and extensions < config.l_grid.extensions:
            top = float(grid[-1])
            if not any(entry.l == top for entry in select_best_lengths(cells)):
                break
            added = config.l_grid.extend(grid)
            self.logger.info(f"Best l at the largest length {top:.6g}; extending the grid to {added[-1]:.6g}")
            cells += self._map(jobs_for(added), config.workers)
            grid = np.concatenate([grid, added])
            extensions += 1

        # grid order within each (N, run, variant), whatever order the lengths were added in
        n_order = {n: i for i, n in enumerate(config.n_centers)}
        variant_order = {v.name: i for i, v in enumerate(variants)}
        cells.sort(key=lambda c: (n_order[c.n_centers], c.run, variant_order[c.variant], c.l))
        for cell in cells:
            fire_hook(self.plugin_manager, HookPoint.SCAN_CELL, cell=cell)

        result = ScanResult(cells, select_best_lengths(cells), tuple(float(l) for l in grid),
                            dataset.dimension, dataset.target_unit)
        for entry in result.best:
            self.logger.info(f"N={entry.n_centers} {entry.variant}: best l={entry.l:.6g} "
                             f"mean test rmse={entry.mean_test_rmse:.6g} {dataset.target_unit}")
            if entry.at_grid_edge:
                self.logger.warning(f"N={entry.n_centers} {entry.variant}: best l={entry.l:.6g} is on the edge "
                                    f"of the scanned grid [{grid[0]:.6g}, {grid[-1]:.6g}]; widen l_grid")
        for cell, reference in result.nesting_violations():
            self.logger.warning(f"{cell.variant} train rmse {cell.train_rmse:.3e} exceeds single-zeta "
                                f"{reference.train_rmse:.3e} at l={cell.l:g} run={cell.run}")

        if write:
            self.write_scan(result, config)
        fire_hook(self.plugin_manager, HookPoint.POST_SCAN, config=config, result=result)
        return result

    def write_scan(self, result: ScanResult, config: ExperimentConfig) -> Tuple[Path, Path]:
        table = write_csv(config.output_dir / SCAN_TABLE, [cell.to_row() for cell in result.cells],
                          columns=SCAN_COLUMNS)
        summary = write_json(config.output_dir / SCAN_SUMMARY, result.summary(config))
        for path in (table, summary):
            fire_hook(self.plugin_manager, HookPoint.OUTPUT_WRITTEN, path=path)
        self.logger.info(f"Scan results written to {config.output_dir}")
        return table, summary

    def best_length_from_summary(self, config: ExperimentConfig, variant: str = SINGLE_ZETA,
                                 n_centers: Optional[int] = None) -> float:
        """
        Best l recorded by an earlier scan of the same config in the output
        directory. The center counts may differ; everything else in the
        recorded config must match.
        """
        path = config.output_dir / SCAN_SUMMARY
        if not path.exists():
            raise ConfigError(f"No length given and no scan summary at {path}; run 'scan' first or pass --l")
        summary = read_json(path)

        expected = {k: v for k, v in to_jsonable(config.to_dict()).items() if k != "n_centers"}
        recorded = {k: v for k, v in summary.get("config", {}).items() if k != "n_centers"}
        if recorded != expected:
            differing = sorted(k for k in set(expected) | set(recorded) if expected.get(k) != recorded.get(k))
            raise ConfigError(f"Scan summary {path} was written for a different config "
                              f"(differs in: {', '.join(differing)}); rerun 'scan' or pass --l")

        n_centers = n_centers or config.n_centers[0]
        for entry in summary.get("best", []):
            if entry["variant"] == variant and entry["n_centers"] == n_centers:
                if entry.get("at_grid_edge"):
                    self.logger.warning(f"Best l={entry['l']:.6g} for {variant} at N={n_centers} is on the edge "
                                        f"of the scanned grid")
                return float(entry["l"])
        raise ConfigError(f"Scan summary {path} has no best length for {variant} at N={n_centers}")

    def run_locality(self, config: ExperimentConfig, l: Optional[float] = None,
                     n_centers: Optional[int] = None, write: bool = True) -> List[LocalityReport]:
        """One locality report per distinct zeta length of the configured variants at l."""
        n_centers = n_centers or config.n_centers[0]
        if l is None:
            l = self.best_length_from_summary(config, SINGLE_ZETA, n_centers)
        if not l > 0.0:
            raise ConfigError(f"Length must be positive, got {l}")

        dataset = self.load_dataset(config)
        prepared = self.prepare_split(dataset, config, n_centers, run=0)
        lengths = sorted({length for v in config.variants for length in v.spec(config.family, l).lengths})

        fire_hook(self.plugin_manager, HookPoint.PRE_LOCALITY, config=config, lengths=lengths)
        reports = [
            kernel_entry_distribution(prepared.train_inputs, prepared.center_inputs, config.family,
                                      length, config.histogram_bins, zeta_index=index)
            for index, length in enumerate(lengths)
        ]
        for report in reports:
            self.logger.info(f"Locality D={report.dimension} l={report.length:.6g}: "
                             f"min={report.minimum:.4f} median={report.median:.4f}")

        if write:
            self.write_locality(reports, config, l, n_centers)
        fire_hook(self.plugin_manager, HookPoint.POST_LOCALITY, config=config, reports=reports)
        return reports

    def write_locality(self, reports: List[LocalityReport], config: ExperimentConfig, l: float,
                       n_centers: int) -> List[Path]:
        paths = []
        for report in reports:
            paths.extend(report.save(config.output_dir / f"locality_N{n_centers}_z{report.zeta_index}"))
        paths.append(write_json(config.output_dir / LOCALITY_SUMMARY, {
            "config": config.to_dict(),
            "l": l,
            "n_centers": n_centers,
            "reports": [
                {"zeta_index": r.zeta_index, "length": r.length, "n_entries": r.n_entries,
                 "minimum": r.minimum, "median": r.median}
                for r in reports
            ],
        }))
        for path in paths:
            fire_hook(self.plugin_manager, HookPoint.OUTPUT_WRITTEN, path=path)
        return paths

    def emit_correlation_data(self, model: FitModel, train_inputs, train_targets, test_inputs, test_targets,
                              output_path: str | Path) -> Tuple[Path, Path]:
        """
        Write exact vs predicted values for the train and test sets.

        The CSV has columns set, exact, predicted; a JSON file next to it
        (same stem) holds rmse and R for both sets, with absent sets flagged.
        """
        output_path = Path(output_path)
        if output_path.suffix.lower() in (".csv", ".json"):
            output_path = output_path.with_suffix("")
        rows = []
        summary = {}
        for label, inputs, targets in (("train", train_inputs, train_targets), ("test", test_inputs, test_targets)):
            targets = np.asarray(targets, dtype=float).reshape(-1)
            if targets.size == 0:
                summary[label] = {"absent": True, "n_points": 0}
                continue
            predictions = model.predict(inputs)
            metrics = score(predictions, targets)
            summary[label] = dict(metrics.to_dict(), absent=False)
            rows.extend({"set": label, "exact": e, "predicted": p} for e, p in zip(targets, predictions))

        csv_path = write_csv(output_path.parent / f"{output_path.name}.csv", rows, columns=["set", "exact", "predicted"])
        json_path = write_json(output_path.parent / f"{output_path.name}.json", {
            "spec": model.spec.to_dict(),
            "n_centers": model.n_centers,
            "metrics": summary,
        })
        for path in (csv_path, json_path):
            fire_hook(self.plugin_manager, HookPoint.OUTPUT_WRITTEN, path=path)
        return csv_path, json_path

    def run_correlation(self, config: ExperimentConfig, l: Optional[float] = None, variant: Optional[str] = None,
                        n_centers: Optional[int] = None, run: int = 0,
                        output_path: Optional[str | Path] = None) -> Tuple[FitModel, Tuple[Path, Path]]:
        """Fit one variant at l on a run's split and emit its correlation data."""
        n_centers = n_centers or config.n_centers[0]
        chosen = config.variant(variant) if variant else config.variants[-1]
        if l is None:
            l = self.best_length_from_summary(config, chosen.name, n_centers)

        dataset = self.load_dataset(config)
        prepared = self.prepare_split(dataset, config, n_centers, run)
        model = self.fit_variant(prepared, chosen, l, config)
        output_path = output_path or config.output_dir / f"correlation_N{n_centers}_{chosen.name}"
        paths = self.emit_correlation_data(model, prepared.train_raw, prepared.train_targets,
                                           prepared.test_raw, prepared.test_targets, output_path)
        return model, paths

# Global runner instance
experiment_runner = None

def init_experiment_runner(plugin_manager=None, regression: Optional[RegressionManager] = None):
    """Initialize the global experiment runner."""
    global experiment_runner
    experiment_runner = ExperimentRunner(plugin_manager, regression)
    return experiment_runner

def _runner() -> ExperimentRunner:
    if not experiment_runner:
        raise RuntimeError("Experiment runner not initialized")
    return experiment_runner

def run_scan(config: ExperimentConfig) -> ScanResult:
    """Global scan function."""
    return _runner().run_scan(config)

def run_locality(config: ExperimentConfig, l: Optional[float] = None,
                 n_centers: Optional[int] = None) -> List[LocalityReport]:
    """Global locality function."""
    return _runner().run_locality(config, l, n_centers)

def emit_correlation_data(model: FitModel, train_inputs, train_targets, test_inputs, test_targets,
                          output_path: str | Path) -> Tuple[Path, Path]:
    """Global correlation export function."""
    return _runner().emit_correlation_data(model, train_inputs, train_targets, test_inputs, test_targets,
                                           output_path)
