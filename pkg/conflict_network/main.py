"""
Command-line entry point: run, sweep, analyze and baseline commands
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from conflict_network.config import settings
from conflict_network.config_loader import ConfigError, build_manifest, load_config, parse_overrides
from conflict_network.models import (
    ClassifierThresholds,
    OutcomeLabel,
    SimConfig,
    SweepSpec,
    TieRule,
    TieRuleKind,
)
from conflict_network.services import (
    ClassificationService,
    EngineService,
    NetworkService,
    SweepService,
)
from conflict_network.storage import RunStore

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


# ============= RUN COMMAND =============

def cmd_run(config: SimConfig, out_dir: Path) -> int:
    """Simulate one config and write manifest, snapshots, summaries, edges and outcome"""
    store = RunStore(out_dir)
    manifest = store.prepare(build_manifest(config))

    with store.snapshot_stream() as write_snapshot:
        result = EngineService.run_simulation(config, on_snapshot=write_snapshot, keep_snapshots=False)

    population = result.population
    thresholds = ClassifierThresholds()
    label = ClassificationService.classify_population(population, thresholds)
    summary = ClassificationService.population_summary(population, thresholds)

    store.write_table(result.summary, "interactions.csv")
    store.write_table(NetworkService.edge_list(population, config.epsilon), "edges.csv")
    store.write_table(
        pd.DataFrame(
            [
                {
                    "round": config.rounds,
                    "label": label.value,
                    "homogeneity": NetworkService.network_homogeneity(population),
                    "distance_from_mixed_nash": ClassificationService.distance_from_mixed_nash(
                        population, config.payoffs
                    ),
                    "n_hubs": summary["n_hubs"],
                    "max_expected_visitors": summary["max_expected_visitors"],
                    "underflow_events": result.diagnostics.underflow_events,
                }
            ]
        ),
        "outcome.csv",
    )
    store.finish(manifest)
    logger.info(f"Final outcome: {label.value}")
    return EXIT_OK


# ============= SWEEP COMMAND =============

def cmd_sweep(spec: SweepSpec, out_dir: Path, workers: int) -> int:
    """Run a sweep, resuming from records already in the directory"""
    store = RunStore(out_dir)
    manifest = store.prepare(build_manifest(spec))

    completed = store.read_records()
    tally = SweepService.run_sweep_records(
        spec,
        workers=workers,
        completed=completed,
        on_record=store.append_record,
    )
    table = tally.table()
    store.write_table(table, "sweep.csv")
    store.finish(manifest)

    errors = int(table["n_errors"].sum())
    if errors:
        logger.warning(f"{errors} sweep jobs failed and were recorded as Unresolved")
    return EXIT_OK


# ============= ANALYZE COMMAND =============

def cmd_analyze(
    run_dir: Path,
    thresholds: ClassifierThresholds,
    tie_threshold: float = 2.0,
    baseline: bool = False,
    baseline_samples: int = 10,
    out_dir: Optional[Path] = None,
) -> int:
    """Time series, degree histograms, trajectory label and optional random baseline of a run"""
    store = RunStore(run_dir)
    manifest = store.read_manifest()
    if manifest is None or manifest.kind != "run":
        raise ValueError(f"{run_dir} does not contain a run manifest")
    config: SimConfig = manifest.config
    target = RunStore(out_dir or run_dir / "analysis")

    rows = []
    labels: List[OutcomeLabel] = []
    hub_flags: List[bool] = []
    last = None
    for snapshot in store.iter_snapshots():
        population = snapshot.population
        summary = ClassificationService.population_summary(population, thresholds)
        label = OutcomeLabel(summary["label"])
        labels.append(label)
        hub_flags.append(summary["n_hubs"] > 0)
        rows.append(
            {
                "round": snapshot.round,
                "homogeneity": NetworkService.network_homogeneity(population),
                "distance_from_mixed_nash": ClassificationService.distance_from_mixed_nash(
                    population, config.payoffs
                ),
                "label": label.value,
                "n_hubs": summary["n_hubs"],
                "max_expected_visitors": summary["max_expected_visitors"],
            }
        )
        last = population
    if last is None:
        raise ValueError(f"Snapshot stream in {run_dir} is empty")

    target.write_table(pd.DataFrame(rows), "timeseries.csv")

    continuous = NetworkService.degree_distribution(last, TieRule(kind=TieRuleKind.EXPECTED_VISITORS))
    binary = NetworkService.degree_distribution(
        last, TieRule(kind=TieRuleKind.BINARY_THRESHOLD, threshold=tie_threshold)
    )
    target.write_table(NetworkService.histogram_frame(continuous), "degree_expected_visitors.csv")
    target.write_table(NetworkService.histogram_frame(binary), "degree_binary.csv")

    if labels[-1].is_convention:
        trajectory = ClassificationService.trajectory_from_labels(labels, hub_flags).value
    else:
        trajectory = "not_applicable"
    target.write_table(
        pd.DataFrame([{"trajectory": trajectory, "snapshot_every": config.snapshot_every}]),
        "trajectory.csv",
    )

    summary_row = {
        "final_label": labels[-1].value,
        "max_expected_visitors": rows[-1]["max_expected_visitors"],
        "heavy_tail": "",
        "tail_excess": float("nan"),
    }
    if baseline:
        p = NetworkService.matched_edge_probability(binary)
        rng = EngineService.init_generator(config.seed)
        random_graphs = NetworkService.erdos_renyi_degree_baseline(config.n, p, baseline_samples, rng)
        target.write_table(NetworkService.histogram_frame(random_graphs), "er_baseline.csv")
        excess = NetworkService.heavy_tail_excess(binary, random_graphs, thresholds.hub_factor)
        summary_row["heavy_tail"] = bool(excess > 0)
        summary_row["tail_excess"] = excess
    target.write_table(pd.DataFrame([summary_row]), "summary.csv")

    logger.info(f"Analysis of {len(rows)} snapshots written to {target.path} (trajectory: {trajectory})")
    return EXIT_OK


# ============= BASELINE COMMAND =============

def cmd_baseline(n: int, p: float, samples: int, seed: int, out_dir: Path) -> int:
    """Mean in-degree histogram of directed Erdos-Renyi graphs"""
    rng = np.random.default_rng(seed)
    histogram = NetworkService.erdos_renyi_degree_baseline(n, p, samples, rng)
    RunStore(out_dir).write_table(NetworkService.histogram_frame(histogram), "er_baseline.csv")
    logger.info(f"Baseline G({n}, {p}) over {samples} samples, mean degree {histogram.mean_degree():.4f}")
    return EXIT_OK


# ============= ARGUMENTS =============

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.TOOL_NAME,
        description="Coevolution of hawk-dove conventions and network ties",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(command: argparse.ArgumentParser) -> None:
        command.add_argument("--config", type=Path, required=True, help="YAML config or manifest")
        command.add_argument("--out", type=Path, required=True, help="output directory")
        command.add_argument("--seed", type=int, default=None, help="override the root seed")
        command.add_argument("--snapshot-every", type=int, default=None, help="rounds between snapshots")
        command.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted override")

    run = commands.add_parser("run", help="simulate one config")
    add_config_flags(run)

    sweep = commands.add_parser("sweep", help="run a payoff-space sweep")
    add_config_flags(sweep)
    sweep.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS, help="worker processes")

    analyze = commands.add_parser("analyze", help="analyze a run directory")
    analyze.add_argument("--run", type=Path, required=True, help="run directory")
    analyze.add_argument("--out", type=Path, default=None, help="output directory (default: <run>/analysis)")
    analyze.add_argument("--tie-threshold", type=float, default=2.0, help="c of the binary tie rule")
    analyze.add_argument("--baseline", action="store_true", help="add the matched Erdos-Renyi baseline")
    analyze.add_argument("--baseline-samples", type=int, default=10, help="random graphs to average")
    analyze.add_argument("--theta-s", type=float, default=settings.THETA_S)
    analyze.add_argument("--theta-p", type=float, default=settings.THETA_P)
    analyze.add_argument("--hub-factor", type=float, default=settings.HUB_FACTOR)
    analyze.add_argument("--homog-max", type=float, default=settings.HOMOG_MAX)

    baseline = commands.add_parser("baseline", help="Erdos-Renyi degree baseline")
    baseline.add_argument("--n", type=int, required=True, help="number of nodes")
    baseline.add_argument("--p", type=float, required=True, help="edge probability")
    baseline.add_argument("--samples", type=int, default=10, help="graphs to average")
    baseline.add_argument("--seed", type=int, default=0, help="seed of the graph sampler")
    baseline.add_argument("--out", type=Path, required=True, help="output directory")

    return parser


def _overrides(args: argparse.Namespace, sweep: bool) -> dict:
    overrides = parse_overrides(args.set)
    prefix = "base." if sweep else ""
    if args.seed is not None:
        overrides[f"{prefix}seed"] = args.seed
    if args.snapshot_every is not None:
        overrides[f"{prefix}snapshot_every"] = args.snapshot_every
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch to a command"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=settings.LOG_FORMAT)

    try:
        if args.command == "run":
            config = load_config(args.config, overrides=_overrides(args, sweep=False))
            if not isinstance(config, SimConfig):
                raise ConfigError(f"{args.config} is a sweep spec; use the sweep command")
            return cmd_run(config, args.out)

        if args.command == "sweep":
            spec = load_config(args.config, overrides=_overrides(args, sweep=True))
            if not isinstance(spec, SweepSpec):
                raise ConfigError(f"{args.config} is a run config; use the run command")
            return cmd_sweep(spec, args.out, args.workers)

        if args.command == "analyze":
            thresholds = ClassifierThresholds(
                theta_s=args.theta_s,
                theta_p=args.theta_p,
                hub_factor=args.hub_factor,
                homog_max=args.homog_max,
            )
            return cmd_analyze(
                args.run,
                thresholds,
                tie_threshold=args.tie_threshold,
                baseline=args.baseline,
                baseline_samples=args.baseline_samples,
                out_dir=args.out,
            )

        return cmd_baseline(args.n, args.p, args.samples, args.seed, args.out)

    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
