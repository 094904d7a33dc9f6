"""
Positioning Orchestrator
Loads configuration, sets up logging and drives the command-line front end
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

import ips.locators  # noqa: F401  (registers the locators)
from ips.errors import ConfigurationError, PositioningError
from ips.fingerprint import build_radio_map
from ips.locators.knn_locator import locate
from ips.service.server import ServerState, serve
from ips.simulation import reports
from ips.simulation.simulator import (
    PRESETS, compare_trajectories, empirical_cdf, preset_config, run_benchmark,
    sweep_data_volume, sweep_k
)
from ips.stores.csv_store import CsvFingerprintStore, records_to_fingerprints
from ips.trackers.pdr_tracker import fused_track, load_trace
from schemas.positioning_schema import Algorithm, LocateConfig, PdrConfig, Position, SimConfig


class PositioningOrchestrator:
    """
    Owns the configuration and turns CLI requests into library calls
    """

    def __init__(self, config_file: str = "config/ips_config.json"):
        self.config_file = config_file

        # Initialize basic logger first
        self.logger = logging.getLogger("PositioningOrchestrator")

        # Load configuration
        self.config = self._load_config()

        # Setup full logging configuration
        self._setup_logging()

    # Typed config sections

    @property
    def locate_config(self) -> LocateConfig:
        return self._section("locate", LocateConfig)

    @property
    def pdr_config(self) -> PdrConfig:
        return self._section("pdr", PdrConfig)

    @property
    def evaluation(self) -> Dict[str, Any]:
        defaults = self._get_default_config()["evaluation"]
        return {**defaults, **self.config.get("evaluation", {})}

    @property
    def service(self) -> Dict[str, Any]:
        defaults = self._get_default_config()["service"]
        return {**defaults, **self.config.get("service", {})}

    def sim_config(self, preset: Optional[str] = None, **overrides) -> SimConfig:
        section = dict(self.config.get("simulation", {}))
        preset = preset or section.pop("preset", "default")
        section.pop("preset", None)
        section.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return preset_config(preset, **section)
        except ValidationError as e:
            raise ConfigurationError(f"invalid 'simulation' config: {e}") from e

    def _section(self, name: str, model):
        try:
            return model(**self.config.get(name, {}))
        except ValidationError as e:
            raise ConfigurationError(f"invalid '{name}' config: {e}") from e

    # Operations

    def build_map(self, fingerprints_path: str):
        records = CsvFingerprintStore(fingerprints_path).load()
        if not records:
            raise ConfigurationError(f"{fingerprints_path} holds no fingerprints")
        radio_map = build_radio_map(records_to_fingerprints(records), len(records[0].ap_rss))
        self.logger.info(f"Radio map from {fingerprints_path}: {len(radio_map)} points, {radio_map.ap_count} APs")
        return radio_map

    def locate(self, fingerprints_path: str, rss: Sequence[float], config: LocateConfig) -> Position:
        return locate(self.build_map(fingerprints_path), rss, config)

    def track(self, fingerprints_path: str, rss: Sequence[float], trace_path: str, config: LocateConfig):
        radio_map = self.build_map(fingerprints_path)
        return fused_track(radio_map, rss, load_trace(trace_path), config, self.pdr_config)

    def simulate(self, sim_config: SimConfig, out_dir: str) -> Dict[str, Any]:
        """
        Run the benchmark and the trajectory comparison, writing every table under out_dir
        """
        algorithms = [
            LocateConfig(algorithm=Algorithm.NN, k=1),
            LocateConfig(algorithm=Algorithm.KNN, k=self.locate_config.k),
            LocateConfig(algorithm=Algorithm.WKNN, k=self.locate_config.k, epsilon=self.locate_config.epsilon),
        ]
        results = run_benchmark(sim_config, algorithms)
        os.makedirs(out_dir, exist_ok=True)
        for config, stats in results.items():
            reports.write_cdf(empirical_cdf(stats.errors), os.path.join(out_dir, f"cdf_{config.label}.csv"))
        reports.write_summary(results, os.path.join(out_dir, "summary.csv"))

        width, height = sim_config.area
        path = [
            Position(x=0.1 * width, y=0.2 * height),
            Position(x=0.7 * width, y=0.2 * height),
            Position(x=0.7 * width, y=0.8 * height),
        ]
        comparison = compare_trajectories(sim_config, path, algorithms, self.pdr_config)
        reports.write_positions(comparison.true_path, os.path.join(out_dir, "trajectory_truth.csv"))
        for config, positions in comparison.located.items():
            reports.write_positions(positions, os.path.join(out_dir, f"trajectory_{config.label}.csv"))
        reports.write_trajectory(comparison.fused, os.path.join(out_dir, "trajectory_fused.csv"))
        self.logger.info(f"Simulation results written to {out_dir}")
        return results

    # Configuration plumbing

    def _load_config(self) -> Dict[str, Any]:
        """
        Load configuration from file
        """
        try:
            if os.path.exists(self.config_file):
                with open(self.config_file, "r", encoding="utf-8") as f:
                    return json.load(f)
            else:
                self.logger.warning(f"Config file not found: {self.config_file}")
                return self._get_default_config()
        except Exception as e:
            self.logger.error(f"Failed to load config: {e}")
            return self._get_default_config()

    def _get_default_config(self) -> Dict[str, Any]:
        """
        Get default configuration
        """
        return {
            "locate": {"algorithm": "wknn", "k": 5, "epsilon": 1e-6},
            "pdr": {"step_length": 0.7, "accel_threshold": 10.8, "min_step_interval": 0.3},
            "simulation": {"preset": "default", "seed": 42},
            "evaluation": {"folds": 10, "success_radius": 2.0, "k_values": [1, 2, 3, 4, 5, 6, 7, 8]},
            "service": {"host": "127.0.0.1", "port": 8765, "db": "data/fingerprints.csv"},
            "logging": {
                "level": "INFO",
                "file": "logs/ips.log",
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
        }

    def _setup_logging(self):
        """
        Setup logging configuration, unless the host application already did
        """
        if logging.getLogger().handlers:
            return
        logging_config = self.config.get("logging", {})
        handlers: List[logging.Handler] = [logging.StreamHandler()]

        log_file = logging_config.get("file")
        if log_file:
            log_dir = os.path.dirname(log_file)
            if log_dir and not os.path.exists(log_dir):
                os.makedirs(log_dir)
            handlers.insert(0, logging.FileHandler(log_file))

        logging.basicConfig(
            level=getattr(logging, str(logging_config.get("level", "INFO")).upper(), logging.INFO),
            format=logging_config.get("format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"),
            handlers=handlers,
        )

    def create_sample_config(self):
        """
        Create a sample configuration file
        """
        config = self._get_default_config()

        config_dir = os.path.dirname(self.config_file)
        if config_dir and not os.path.exists(config_dir):
            os.makedirs(config_dir)

        with open(self.config_file, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2)

        self.logger.info(f"Sample configuration created: {self.config_file}")


def _format_coordinate(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def _parse_rss(values: Sequence[str]) -> List[float]:
    rss = []
    for value in values:
        for part in value.split(","):
            if part.strip():
                try:
                    rss.append(float(part))
                except ValueError:
                    raise ConfigurationError(f"--rss value {part!r} is not a number")
    if not rss:
        raise ConfigurationError("--rss needs at least one value")
    return rss


def _locate_config(orchestrator: PositioningOrchestrator, args) -> LocateConfig:
    base = orchestrator.locate_config
    return LocateConfig(
        algorithm=Algorithm(args.algorithm) if args.algorithm else base.algorithm,
        k=args.k if args.k is not None else base.k,
        epsilon=base.epsilon,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ips", description="Wi-Fi fingerprint + PDR indoor positioning")
    parser.add_argument("--config", default="config/ips_config.json", help="Configuration file path")
    sub = parser.add_subparsers(dest="command", required=True)

    def locate_options(p):
        p.add_argument("--algorithm", choices=[a.value for a in Algorithm], help="Matcher (default from config)")
        p.add_argument("--k", type=int, help="Number of neighbours (default from config)")

    def sim_options(p):
        p.add_argument("--preset", choices=sorted(PRESETS), help="Simulation preset")
        p.add_argument("--seed", type=int, help="Seed for all randomness")
        p.add_argument("--noise-sigma", type=float, help="RSS noise standard deviation, dBm")

    p = sub.add_parser("build-map", help="Build a radio map and report its size")
    p.add_argument("fingerprints", help="Fingerprint CSV (X,Y,AP1..APn)")

    p = sub.add_parser("locate", help="Locate one RSS vector")
    p.add_argument("fingerprints")
    p.add_argument("--rss", nargs="+", required=True, help="RSS values in dBm, space separated or --rss=a,b,c")
    locate_options(p)

    p = sub.add_parser("track", help="WKNN fix followed by dead reckoning over a sensor trace")
    p.add_argument("fingerprints")
    p.add_argument("--rss", nargs="+", required=True)
    p.add_argument("--trace", required=True, help="Sensor CSV (t,ax,ay,az,heading)")
    p.add_argument("--out", help="Write the trajectory here instead of stdout")
    p.add_argument("--k", type=int)

    p = sub.add_parser("simulate", help="Benchmark NN/KNN/WKNN on a synthetic environment")
    sim_options(p)
    p.add_argument("--test-samples", type=int)
    p.add_argument("--out", default="results", help="Output directory")

    p = sub.add_parser("sweep-k", help="Cross-validation score versus K")
    sim_options(p)
    p.add_argument("--k-values", type=int, nargs="+")
    p.add_argument("--folds", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--out")

    p = sub.add_parser("sweep-data", help="Cross-validation score versus samples per reference point")
    sim_options(p)
    p.add_argument("--samples-per-point", type=int, nargs="+", default=[1, 2, 4, 8])
    p.add_argument("--k", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--out")

    p = sub.add_parser("serve", help="Run the localization server")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--db", help="Fingerprint store CSV")
    locate_options(p)

    sub.add_parser("create-config", help="Write the default configuration file")
    return parser


def _emit_csv(write, payload, out: Optional[str]) -> None:
    if out:
        write(payload, out)
    else:
        write(payload, sys.stdout)


def _dispatch(orchestrator: PositioningOrchestrator, args) -> int:
    command = args.command

    if command == "create-config":
        orchestrator.create_sample_config()
        return 0

    if command == "build-map":
        radio_map = orchestrator.build_map(args.fingerprints)
        print(f"{len(radio_map)} reference points, {radio_map.ap_count} APs")
        return 0

    if command == "locate":
        position = orchestrator.locate(args.fingerprints, _parse_rss(args.rss), _locate_config(orchestrator, args))
        print(f"{_format_coordinate(position.x)},{_format_coordinate(position.y)}")
        return 0

    if command == "track":
        base = orchestrator.locate_config
        config = LocateConfig(algorithm=Algorithm.WKNN, k=args.k or base.k, epsilon=base.epsilon)
        trajectory = orchestrator.track(args.fingerprints, _parse_rss(args.rss), args.trace, config)
        _emit_csv(reports.write_trajectory, trajectory, args.out)
        return 0

    if command == "simulate":
        sim_config = orchestrator.sim_config(
            args.preset, seed=args.seed, noise_sigma=args.noise_sigma, test_samples=args.test_samples
        )
        results = orchestrator.simulate(sim_config, args.out)
        reports.write_summary(results, sys.stdout)
        return 0

    evaluation = orchestrator.evaluation
    folds = args.folds or evaluation["folds"]
    radius = args.radius if args.radius is not None else evaluation["success_radius"]

    if command == "sweep-k":
        sim_config = orchestrator.sim_config(args.preset, seed=args.seed, noise_sigma=args.noise_sigma)
        pairs = sweep_k(sim_config, args.k_values or evaluation["k_values"], folds, radius)
        _emit_csv(reports.write_sweep, pairs, args.out)
        return 0

    if command == "sweep-data":
        sim_config = orchestrator.sim_config(args.preset, seed=args.seed, noise_sigma=args.noise_sigma)
        k = args.k or orchestrator.locate_config.k
        pairs = sweep_data_volume(sim_config, args.samples_per_point, k, folds, radius)
        _emit_csv(
            lambda p, d: reports.write_sweep(p, d, key="samples_per_point"), pairs, args.out
        )
        return 0

    if command == "serve":
        service = orchestrator.service
        state = ServerState(
            CsvFingerprintStore(args.db or service["db"]),
            _locate_config(orchestrator, args),
            orchestrator.pdr_config,
        )
        serve(state, args.host or service["host"], args.port if args.port is not None else service["port"])
        return 0

    raise ConfigurationError(f"unknown command {command}")


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point for the command line; returns the process exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    try:
        orchestrator = PositioningOrchestrator(args.config)
        return _dispatch(orchestrator, args)
    except (PositioningError, ValidationError, OSError, KeyError) as e:
        logging.getLogger("PositioningOrchestrator").error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    """
    Main entry point for the positioning CLI
    """
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
