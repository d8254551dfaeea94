import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from core import experiments
from core.dataset import DEFAULT_BOX_HALFWIDTH, save_csv, synth_potential
from core.diagnostics import expected_rbf_kernel, gaussian_mass_within, gaussian_radius_for_mass
from core.experiments import ConfigError, ExperimentConfig, ExperimentRunner
from core.plugin_system.plugin_base import HookPoint
from core.plugin_system.plugin_manager import fire_hook
from core.regression import load_model, save_model
from core.utils import write_csv

DEFAULT_MASS_DIMENSIONS = [1, 2, 3, 6, 15]
DEFAULT_MASS_RADII = [0.5, 1.0, 2.0, 3.0]
DEFAULT_MASS_LEVELS = [0.5, 0.9, 0.99]

class CLIInterface:
    """CLI interface with plugin support."""

    def __init__(self, plugin_manager=None, numerics: Optional[dict] = None, runner: Optional[ExperimentRunner] = None):
        self.plugin_manager = plugin_manager
        self.numerics = numerics or {}
        self.runner = runner or experiments.experiment_runner or ExperimentRunner(plugin_manager)
        self.logger = logging.getLogger('CLIInterface')

    def _config(self, args) -> ExperimentConfig:
        """Load the experiment config and apply command-line overrides."""
        if not args.config:
            raise ConfigError("--config is required for this command")
        config = ExperimentConfig.from_file(args.config, self.numerics)
        return config.with_overrides(
            seed=args.seed,
            output_dir=args.out,
            runs=getattr(args, "runs", None),
            n_centers=getattr(args, "n_centers", None),
            workers=getattr(args, "workers", None),
        )

    def scan(self, args):
        """Handle scan command."""
        config = self._config(args)
        result = self.runner.run_scan(config)

        for entry in result.best:
            print(f"N={entry.n_centers} {entry.variant}: best l={entry.l:.6g} "
                  f"mean test rmse={entry.mean_test_rmse:.6g} {result.target_unit}")
        failed = sum(1 for cell in result.cells if not cell.ok)
        if failed:
            print(f"{failed} of {len(result.cells)} cells failed; see {experiments.SCAN_TABLE}")
        print(f"Scan complete! Results in: {config.output_dir}")

    def locality(self, args):
        """Handle locality command."""
        config = self._config(args)
        reports = self.runner.run_locality(config, args.l, args.n_centers[0] if args.n_centers else None)
        for report in reports:
            print(f"l={report.length:.6g} (zeta {report.zeta_index}): "
                  f"min={report.minimum:.4f} median={report.median:.4f} entries={report.n_entries}")
        print(f"Locality reports written to: {config.output_dir}")

    def correlate(self, args):
        """Handle correlate command."""
        config = self._config(args)
        n_centers = args.n_centers[0] if args.n_centers else None

        if args.model:
            model = load_model(args.model)
            dataset = self.runner.load_dataset(config)
            prepared = self.runner.prepare_split(dataset, config, n_centers or config.n_centers[0], args.run)
            output = args.output or config.output_dir / f"correlation_{Path(args.model).stem}"
            paths = self.runner.emit_correlation_data(model, prepared.train_raw, prepared.train_targets,
                                                      prepared.test_raw, prepared.test_targets, output)
        else:
            model, paths = self.runner.run_correlation(config, args.l, args.variant, n_centers, args.run, args.output)

        if args.save_model:
            save_model(model, args.save_model)
            print(f"Model saved to: {args.save_model}")
        print(f"Correlation data written to: {paths[0]} and {paths[1]}")

    def gen_data(self, args):
        """Handle gen-data command."""
        if args.seed is None:
            raise ConfigError("--seed is required for gen-data")
        dataset = synth_potential(args.dimension, args.points, args.seed, args.box_halfwidth)
        path = save_csv(dataset, args.out)
        fire_hook(self.plugin_manager, HookPoint.OUTPUT_WRITTEN, path=path)
        print(f"Wrote {dataset.n_total} points in {dataset.dimension} dimensions to: {path}")

    def mass(self, args):
        """Handle mass command: Gaussian mass inside a ball, both directions."""
        within = pd.DataFrame(
            [{"dimension": d, "radius": r, "mass_within": gaussian_mass_within(d, r)}
             for d in args.dimensions for r in args.radii]
        )
        radii = pd.DataFrame(
            [{"dimension": d, "mass": p, "radius": gaussian_radius_for_mass(d, p)}
             for d in args.dimensions for p in args.masses]
        )
        tables = {"mass_within": within, "radius_for_mass": radii}
        if args.lengths:
            tables["expected_kernel"] = pd.DataFrame(
                [{"dimension": d, "l": l, "expected_kernel": expected_rbf_kernel(d, l)}
                 for d in args.dimensions for l in args.lengths]
            )

        for name, table in tables.items():
            print(f"# {name}")
            print(table.to_string(index=False, float_format=lambda v: f"{v:.7f}"))
            if args.out:
                path = write_csv(Path(args.out) / f"{name}.csv", table)
                fire_hook(self.plugin_manager, HookPoint.OUTPUT_WRITTEN, path=path)

def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="Path to the experiment config (JSON)")
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument("-o", "--out", type=Path, help="Override the output directory")
    parser.add_argument("-n", "--n-centers", type=int, nargs="+", dest="n_centers",
                        help="Override the number(s) of basis centers")

def build_parser(cli: CLIInterface) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelzeta",
        description="Multi-zeta kernel regression experiments: length scans, locality and correlation data"
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Scan command
    scan_parser = subparsers.add_parser("scan", help="Scan the kernel length for every variant")
    _add_experiment_flags(scan_parser)
    scan_parser.add_argument("--runs", type=int, help="Override the number of seeded runs")
    scan_parser.add_argument("--workers", type=int, help="Fit scan cells on this many threads")
    scan_parser.set_defaults(func=cli.scan)

    # Locality command
    locality_parser = subparsers.add_parser("locality", help="Kernel entry distributions at a length")
    _add_experiment_flags(locality_parser)
    locality_parser.add_argument("--l", type=float, help="Kernel length (default: best single-zeta l of a prior scan)")
    locality_parser.set_defaults(func=cli.locality)

    # Correlate command
    correlate_parser = subparsers.add_parser("correlate", help="Exact vs predicted values for one fit")
    _add_experiment_flags(correlate_parser)
    correlate_parser.add_argument("--l", type=float, help="Kernel length (default: best l of a prior scan)")
    correlate_parser.add_argument("--variant", help="Variant name, e.g. single_zeta or double_zeta_x1.5")
    correlate_parser.add_argument("--run", type=int, default=0, help="Run index selecting the split")
    correlate_parser.add_argument("--model", help="Use a saved model instead of fitting")
    correlate_parser.add_argument("--save-model", dest="save_model", help="Save the fitted model as JSON")
    correlate_parser.add_argument("--output", help="Output path stem for the CSV and JSON files")
    correlate_parser.set_defaults(func=cli.correlate)

    # Gen-data command
    gen_parser = subparsers.add_parser("gen-data", help="Sample the synthetic potential to CSV")
    gen_parser.add_argument("-d", "--dimension", type=int, required=True, help="Number of coordinates")
    gen_parser.add_argument("-p", "--points", type=int, required=True, help="Number of points")
    gen_parser.add_argument("--seed", type=int, help="Random seed (required)")
    gen_parser.add_argument("--box-halfwidth", type=float, default=DEFAULT_BOX_HALFWIDTH, dest="box_halfwidth",
                            help="Coordinates are uniform on [-h, h]")
    gen_parser.add_argument("-o", "--out", type=Path, required=True, help="Output CSV path")
    gen_parser.set_defaults(func=cli.gen_data)

    # Mass command
    mass_parser = subparsers.add_parser("mass", help="Gaussian probability mass inside a ball")
    mass_parser.add_argument("--dimensions", type=int, nargs="+", default=DEFAULT_MASS_DIMENSIONS)
    mass_parser.add_argument("--radii", type=float, nargs="+", default=DEFAULT_MASS_RADII,
                             help="Radii in standard deviations")
    mass_parser.add_argument("--masses", type=float, nargs="+", default=DEFAULT_MASS_LEVELS,
                             help="Mass levels to invert into radii")
    mass_parser.add_argument("--lengths", type=float, nargs="+",
                             help="Also tabulate the expected RBF kernel value at these lengths")
    mass_parser.add_argument("-o", "--out", type=Path, help="Also write the tables as CSV into this directory")
    mass_parser.set_defaults(func=cli.mass)

    return parser

def main(argv: Optional[Sequence[str]] = None, plugin_manager=None, numerics: Optional[dict] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    cli = CLIInterface(plugin_manager, numerics)
    parser = build_parser(cli)

    # Let plugins add their own commands
    fire_hook(plugin_manager, HookPoint.CLI_INIT, interface=cli, parser=parser)

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 0

    try:
        args.func(args)
        return 0
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        logging.error(f"Command '{args.command}' failed: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return 1
