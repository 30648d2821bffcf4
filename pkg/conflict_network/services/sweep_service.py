"""
Service for payoff-space sweeps: grids, seed batches and order-independent aggregation
"""
import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import pandas as pd

from conflict_network.models import (
    ClassifierThresholds,
    GamePayoffs,
    GridKind,
    OutcomeLabel,
    RunRecord,
    SimConfig,
    Snapshot,
    SweepJob,
    SweepSpec,
)
from .classification_service import ClassificationService
from .engine_service import EngineService
from .network_service import NetworkService
from .stats_service import StatsService

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "x1",
    "y1",
    "x2",
    "y2",
    "n_seeds",
    "n_bourgeois",
    "n_paradoxical",
    "n_network",
    "n_hybrid",
    "n_unresolved",
    "prop_paradoxical",
    "mean_rounds_to_class",
    "mean_homogeneity",
    "n_errors",
    "prop_bourgeois",
    "prop_paradoxical_ci_low",
    "prop_paradoxical_ci_high",
]


def _execute(args: Tuple[SweepSpec, SweepJob]) -> RunRecord:
    spec, job = args
    return SweepService.execute_job(spec, job)


class SweepTally:
    """Per-run records keyed by (point, replicate); merging is a set union"""

    def __init__(self, records: Iterable[RunRecord] = ()):
        self.records: Dict[Tuple[int, int], RunRecord] = {}
        self.grid: Dict[int, GamePayoffs] = {}
        for record in records:
            self.add(record)

    def add(self, record: RunRecord) -> None:
        known = self.grid.get(record.point_index)
        if known is not None and known != record.payoffs:
            raise ValueError(
                f"Grid mismatch at point {record.point_index}: {known.as_tuple()} vs {record.payoffs.as_tuple()}"
            )
        existing = self.records.get(record.key)
        if existing is not None and existing != record:
            raise ValueError(f"Conflicting records for point {record.point_index}, replicate {record.replicate}")
        self.grid[record.point_index] = record.payoffs
        self.records[record.key] = record

    def merge(self, other: "SweepTally") -> "SweepTally":
        merged = SweepTally(self.records.values())
        for record in other.records.values():
            merged.add(record)
        return merged

    def __len__(self) -> int:
        return len(self.records)

    def table(self) -> pd.DataFrame:
        """One row per grid point, in point order"""
        by_point: Dict[int, List[RunRecord]] = {}
        for key in sorted(self.records):
            by_point.setdefault(key[0], []).append(self.records[key])

        rows = []
        for point_index in sorted(by_point):
            records = by_point[point_index]
            counts = StatsService.label_counts(r.label for r in records)
            n_seeds = len(records)
            rounds = [r.rounds_to_classification for r in records if r.rounds_to_classification is not None]
            homogeneity = [r.homogeneity for r in records if r.homogeneity is not None]
            n_paradoxical = counts[OutcomeLabel.PARADOXICAL]
            low, high = StatsService.wilson_interval(n_paradoxical, n_seeds)
            payoffs = self.grid[point_index]
            rows.append(
                {
                    "x1": payoffs.x1,
                    "y1": payoffs.y1,
                    "x2": payoffs.x2,
                    "y2": payoffs.y2,
                    "n_seeds": n_seeds,
                    "n_bourgeois": counts[OutcomeLabel.BOURGEOIS],
                    "n_paradoxical": n_paradoxical,
                    "n_network": counts[OutcomeLabel.NETWORK],
                    "n_hybrid": counts[OutcomeLabel.HYBRID],
                    "n_unresolved": counts[OutcomeLabel.UNRESOLVED],
                    "prop_paradoxical": n_paradoxical / n_seeds,
                    "mean_rounds_to_class": math.fsum(rounds) / len(rounds) if rounds else float("nan"),
                    "mean_homogeneity": math.fsum(homogeneity) / len(homogeneity) if homogeneity else float("nan"),
                    "n_errors": sum(1 for r in records if r.error),
                    "prop_bourgeois": counts[OutcomeLabel.BOURGEOIS] / n_seeds,
                    "prop_paradoxical_ci_low": low,
                    "prop_paradoxical_ci_high": high,
                }
            )
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)


class SweepService:
    """Service for parameter sweeps over the payoff space"""

    @staticmethod
    def _axis(step: float) -> List[float]:
        """Interior grid values step, 2*step, ... strictly inside (0, 1)"""
        count = int(math.floor(1.0 / step + 1e-9))
        values = [round(k * step, 10) for k in range(1, count + 1)]
        return [v for v in values if v < 1.0]

    @staticmethod
    def grid_points(spec: SweepSpec) -> List[GamePayoffs]:
        """Valid payoff points of the grid, in generation order"""
        grid = spec.grid
        candidates: List[Tuple[float, float, float, float]] = []

        if grid.kind is GridKind.SYMMETRIC_SQUARE:
            axis = SweepService._axis(grid.step)
            candidates = [(x, y, x, y) for y in axis for x in axis]
        elif grid.kind is GridKind.ASYMMETRIC_SLICE:
            axis = SweepService._axis(grid.step)
            candidates = [(x1, 1.0 - x1, x2, 1.0 - x2) for x1 in axis for x2 in axis]
        elif grid.kind is GridKind.BIAS_LINE:
            n_steps = int(round((grid.y2_stop - grid.y2_start) / grid.step))
            for k in range(n_steps + 1):
                y2 = round(grid.y2_start + k * grid.step, 10)
                candidates.append((grid.host_x, grid.host_y, round(y2 - grid.bias_offset, 10), y2))
        else:
            candidates = [p.as_tuple() for p in grid.points]

        points = []
        for x1, y1, x2, y2 in candidates:
            try:
                points.append(GamePayoffs(x1=x1, y1=y1, x2=x2, y2=y2))
            except ValueError:
                logger.warning(f"Skipping invalid grid point ({x1}, {y1}, {x2}, {y2})")
        return points

    @staticmethod
    def job_seed(base_seed: int, point_index: int, replicate: int) -> int:
        """Stable 64-bit seed of one job"""
        digest = hashlib.sha256(f"{base_seed}-{point_index}-{replicate}".encode()).digest()
        return int.from_bytes(digest[:8], "little")

    @staticmethod
    def generate_grid(spec: SweepSpec) -> List[SweepJob]:
        """Deterministic job list: every point times `seeds_per_point` replicates"""
        points = SweepService.grid_points(spec)
        if not points:
            raise ValueError(f"Sweep grid '{spec.grid.kind.value}' produced no valid payoff points")
        return [
            SweepJob(
                point_index=point_index,
                replicate=replicate,
                payoffs=payoffs,
                seed=SweepService.job_seed(spec.base.seed, point_index, replicate),
            )
            for point_index, payoffs in enumerate(points)
            for replicate in range(spec.seeds_per_point)
        ]

    @staticmethod
    def job_config(spec: SweepSpec, job: SweepJob) -> SimConfig:
        return spec.base.model_copy(update={"payoffs": job.payoffs, "seed": job.seed})

    @staticmethod
    def execute_job(spec: SweepSpec, job: SweepJob) -> RunRecord:
        """Run and classify one job; failures become Unresolved error records"""
        thresholds: ClassifierThresholds = spec.thresholds
        rounds: List[int] = []
        labels: List[OutcomeLabel] = []

        def observe(snapshot: Snapshot) -> None:
            rounds.append(snapshot.round)
            labels.append(ClassificationService.classify_population(snapshot.population, thresholds))

        try:
            config = SweepService.job_config(spec, job)
            result = EngineService.run_simulation(config, on_snapshot=observe, keep_snapshots=False)
            return RunRecord(
                point_index=job.point_index,
                replicate=job.replicate,
                payoffs=job.payoffs,
                seed=job.seed,
                label=labels[-1],
                rounds_to_classification=ClassificationService.rounds_to_classification(rounds, labels),
                homogeneity=NetworkService.network_homogeneity(result.population),
                distance_from_mixed_nash=ClassificationService.distance_from_mixed_nash(
                    result.population, job.payoffs
                ),
            )
        except Exception as e:
            logger.error(f"Job (point {job.point_index}, replicate {job.replicate}) failed: {e}")
            return RunRecord(
                point_index=job.point_index,
                replicate=job.replicate,
                payoffs=job.payoffs,
                seed=job.seed,
                label=OutcomeLabel.UNRESOLVED,
                error=True,
                error_message=str(e),
            )

    @staticmethod
    def run_sweep_records(
        spec: SweepSpec,
        workers: int = 1,
        completed: Iterable[RunRecord] = (),
        on_record: Optional[Callable[[RunRecord], None]] = None,
    ) -> SweepTally:
        """
        Execute every job not already in `completed` and tally all records.

        Args:
            spec: sweep specification
            workers: process count; 1 runs in-process
            completed: records from an interrupted earlier attempt
            on_record: called with each new record as it finishes
        """
        tally = SweepTally(completed)
        jobs = [job for job in SweepService.generate_grid(spec) if (job.point_index, job.replicate) not in tally.records]
        logger.info(f"Sweep: {len(jobs)} jobs to run, {len(tally)} already done, workers={workers}")

        progress_every = max(1, len(jobs) // 10)

        def accept(record: RunRecord, done: int) -> None:
            tally.add(record)
            if on_record is not None:
                on_record(record)
            if done % progress_every == 0 or done == len(jobs):
                logger.info(f"Sweep progress: {done}/{len(jobs)} jobs")

        if workers <= 1:
            for done, job in enumerate(jobs, start=1):
                accept(SweepService.execute_job(spec, job), done)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_execute, (spec, job)) for job in jobs]
                for done, future in enumerate(as_completed(futures), start=1):
                    accept(future.result(), done)

        return tally

    @staticmethod
    def run_sweep(spec: SweepSpec, workers: int = 1) -> pd.DataFrame:
        """Run every job of the sweep and return one row per grid point"""
        return SweepService.run_sweep_records(spec, workers=workers).table()

    @staticmethod
    def aggregate(records: Iterable[RunRecord]) -> pd.DataFrame:
        """Outcome table of a set of per-run records"""
        return SweepTally(records).table()

    @staticmethod
    def point_trend(table: pd.DataFrame, column: str = "y2") -> float:
        """Spearman correlation between a payoff column and prop_paradoxical"""
        ordered = table.sort_values(column)
        return StatsService.spearman_trend(ordered[column].to_numpy(), ordered["prop_paradoxical"].to_numpy())

