"""
Tests for grid generation, job execution and order-independent aggregation
"""
import random

import pandas as pd
import pytest

from conflict_network.models import (
    GamePayoffs,
    GridKind,
    GridSpec,
    OutcomeLabel,
    RunRecord,
    SimConfig,
    SweepSpec,
    UpdateMode,
)
from conflict_network.services import ClassificationService, EngineService, StatsService, SweepService, SweepTally
from conflict_network.services.sweep_service import TABLE_COLUMNS


def tiny_spec(kind=GridKind.EXPLICIT, seeds=2, **grid):
    if kind is GridKind.EXPLICIT and "points" not in grid:
        grid["points"] = [GamePayoffs(x1=0.2, y1=0.6, x2=0.2, y2=0.6)]
    base = SimConfig(
        n=4,
        payoffs=GamePayoffs(x1=0.5, y1=0.5, x2=0.5, y2=0.5),
        delta=0.05,
        epsilon=0.01,
        seed=99,
        rounds=60,
        snapshot_every=20,
    )
    return SweepSpec(grid=GridSpec(kind=kind, **grid), seeds_per_point=seeds, base=base)


def record(point, replicate, label, payoffs=None, **extra):
    return RunRecord(
        point_index=point,
        replicate=replicate,
        payoffs=payoffs or GamePayoffs(x1=0.2, y1=0.6, x2=0.2, y2=0.6),
        seed=SweepService.job_seed(0, point, replicate),
        label=label,
        **extra,
    )


# ============= GRIDS =============

def test_symmetric_square_grid():
    spec = tiny_spec(GridKind.SYMMETRIC_SQUARE, seeds=3, step=0.1)
    points = SweepService.grid_points(spec)
    assert len(points) == 81
    assert all(p.x1 == p.x2 and p.y1 == p.y2 for p in points)
    assert len(SweepService.generate_grid(spec)) == 81 * 3


def test_asymmetric_slice_grid():
    points = SweepService.grid_points(tiny_spec(GridKind.ASYMMETRIC_SLICE, step=0.1))
    assert len(points) == 81
    for p in points:
        assert abs(p.x1 + p.y1 - 1.0) <= 1e-12
        assert abs(p.x2 + p.y2 - 1.0) <= 1e-12


def test_bias_line_grid():
    points = SweepService.grid_points(tiny_spec(GridKind.BIAS_LINE, step=0.1))
    assert [p.y2 for p in points] == pytest.approx([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    for p in points:
        assert (p.x1, p.y1) == (0.4, 0.5)
        assert p.x2 == pytest.approx(p.y2 - 0.1)


@pytest.mark.parametrize("kind", [GridKind.SYMMETRIC_SQUARE, GridKind.ASYMMETRIC_SLICE, GridKind.BIAS_LINE])
@pytest.mark.parametrize("step", [0.05, 0.1, 0.25])
def test_grids_stay_inside_open_unit_square(kind, step):
    for p in SweepService.grid_points(tiny_spec(kind, step=step)):
        assert all(0.0 < v < 1.0 for v in p.as_tuple())


def test_empty_grid_rejected():
    with pytest.raises(ValueError, match="no valid payoff points"):
        SweepService.generate_grid(tiny_spec(points=[]))


def test_job_seeds_are_stable_and_distinct():
    jobs = SweepService.generate_grid(tiny_spec(GridKind.SYMMETRIC_SQUARE, seeds=4, step=0.25))
    again = SweepService.generate_grid(tiny_spec(GridKind.SYMMETRIC_SQUARE, seeds=4, step=0.25))
    assert jobs == again
    assert len({job.seed for job in jobs}) == len(jobs)
    assert all(0 <= job.seed < 2 ** 64 for job in jobs)


# ============= JOBS =============

def test_job_rerun_in_isolation_matches():
    spec = tiny_spec(seeds=3)
    jobs = SweepService.generate_grid(spec)
    full = SweepService.run_sweep_records(spec)
    alone = SweepService.execute_job(spec, jobs[2])
    assert full.records[jobs[2].point_index, jobs[2].replicate] == alone


def test_single_job_table_reproduces_run():
    spec = tiny_spec(seeds=1)
    table = SweepService.run_sweep(spec)
    job = SweepService.generate_grid(spec)[0]
    label = SweepService.execute_job(spec, job).label
    column = f"n_{label.value.lower()}"
    assert table.loc[0, column] == 1
    assert table.loc[0, "n_seeds"] == 1


def test_execute_job_classifies_final_state():
    spec = tiny_spec(seeds=1)
    job = SweepService.generate_grid(spec)[0]
    result = EngineService.run_simulation(SweepService.job_config(spec, job))
    expected = ClassificationService.classify_population(result.population, spec.thresholds)
    assert SweepService.execute_job(spec, job).label is expected


def locked_spec(seeds=3):
    base = tiny_spec().base.model_copy(update={"epsilon": 0.0, "delta": 0.0, "mode": UpdateMode.NO_NETWORK})
    return tiny_spec(seeds=seeds).model_copy(update={"base": base})


def test_sweep_counts_convention_outcomes(locked_paradoxical):
    spec = locked_spec()
    tally = SweepService.run_sweep_records(spec)
    assert {r.label for r in tally.records.values()} == {OutcomeLabel.PARADOXICAL}
    assert all(r.rounds_to_classification == 0 for r in tally.records.values())
    table = tally.table()
    assert table.loc[0, "n_paradoxical"] == 3
    assert table.loc[0, "n_unresolved"] == 0
    assert table.loc[0, "prop_paradoxical"] == pytest.approx(1.0)


def test_failing_job_becomes_error_record(monkeypatch):
    def explode(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(EngineService, "run_simulation", staticmethod(explode))
    table = SweepService.run_sweep(tiny_spec(seeds=2))
    assert table.loc[0, "n_unresolved"] == 2
    assert table.loc[0, "n_errors"] == 2


def test_sweep_is_deterministic():
    spec = tiny_spec(GridKind.EXPLICIT, seeds=3, points=[[0.2, 0.6, 0.2, 0.6], [0.4, 0.5, 0.3, 0.4]])
    pd.testing.assert_frame_equal(SweepService.run_sweep(spec), SweepService.run_sweep(spec))


def test_parallel_sweep_matches_serial():
    spec = tiny_spec(GridKind.EXPLICIT, seeds=3, points=[[0.2, 0.6, 0.2, 0.6], [0.4, 0.5, 0.3, 0.4]])
    pd.testing.assert_frame_equal(SweepService.run_sweep(spec, workers=2), SweepService.run_sweep(spec))


def test_resume_skips_completed_jobs():
    spec = tiny_spec(seeds=4)
    full = SweepService.run_sweep_records(spec)
    done = list(full.records.values())[:2]
    fresh = []
    resumed = SweepService.run_sweep_records(spec, completed=done, on_record=fresh.append)
    assert len(fresh) == 2
    pd.testing.assert_frame_equal(resumed.table(), full.table())


# ============= AGGREGATION =============

def test_table_columns():
    table = SweepService.aggregate([record(0, 0, OutcomeLabel.PARADOXICAL)])
    assert list(table.columns) == TABLE_COLUMNS
    assert TABLE_COLUMNS[:13] == [
        "x1", "y1", "x2", "y2", "n_seeds", "n_bourgeois", "n_paradoxical", "n_network",
        "n_hybrid", "n_unresolved", "prop_paradoxical", "mean_rounds_to_class", "mean_homogeneity",
    ]


def test_counts_match_hand_tally():
    labels = [OutcomeLabel.PARADOXICAL] * 5 + [OutcomeLabel.BOURGEOIS] * 2 + [OutcomeLabel.HYBRID, OutcomeLabel.UNRESOLVED]
    records = [record(0, k, label, rounds_to_classification=10 * k, homogeneity=0.9) for k, label in enumerate(labels)]
    row = SweepService.aggregate(records).iloc[0]
    assert (row.n_seeds, row.n_paradoxical, row.n_bourgeois, row.n_hybrid, row.n_network, row.n_unresolved) == (
        9, 5, 2, 1, 0, 1
    )
    assert row.n_bourgeois + row.n_paradoxical + row.n_network + row.n_hybrid + row.n_unresolved == row.n_seeds
    assert row.prop_paradoxical == pytest.approx(5 / 9)
    assert row.prop_bourgeois == pytest.approx(2 / 9)
    assert row.mean_rounds_to_class == pytest.approx(40.0)
    assert row.prop_paradoxical_ci_low < 5 / 9 < row.prop_paradoxical_ci_high


def test_all_unresolved_has_zero_convention_proportions():
    row = SweepService.aggregate([record(0, k, OutcomeLabel.UNRESOLVED) for k in range(4)]).iloc[0]
    assert (row.prop_paradoxical, row.prop_bourgeois) == (0.0, 0.0)


def test_merge_equals_full_aggregation_in_any_order():
    other = GamePayoffs(x1=0.4, y1=0.5, x2=0.3, y2=0.4)
    records = [
        record(p, k, random.Random(p * 10 + k).choice(list(OutcomeLabel)), payoffs=other if p else None,
               homogeneity=0.1 * k + 0.01 * p)
        for p in range(2)
        for k in range(6)
    ]
    full = SweepTally(records).table()
    shuffled = records[:]
    random.Random(1).shuffle(shuffled)
    left, right = SweepTally(shuffled[:5]), SweepTally(shuffled[5:])
    pd.testing.assert_frame_equal(left.merge(right).table(), full)
    pd.testing.assert_frame_equal(right.merge(left).table(), full)
    pd.testing.assert_frame_equal(left.merge(SweepTally()).table(), left.table())


def test_merge_is_idempotent_for_identical_records():
    records = [record(0, k, OutcomeLabel.BOURGEOIS) for k in range(3)]
    tally = SweepTally(records)
    assert len(tally.merge(SweepTally(records[:2]))) == 3


def test_conflicting_duplicates_rejected():
    tally = SweepTally([record(0, 0, OutcomeLabel.BOURGEOIS)])
    with pytest.raises(ValueError, match="Conflicting"):
        tally.add(record(0, 0, OutcomeLabel.PARADOXICAL))


def test_mismatched_grids_rejected():
    left = SweepTally([record(0, 0, OutcomeLabel.BOURGEOIS)])
    right = SweepTally([record(0, 1, OutcomeLabel.BOURGEOIS, payoffs=GamePayoffs(x1=0.3, y1=0.3, x2=0.3, y2=0.3))])
    with pytest.raises(ValueError, match="Grid mismatch"):
        left.merge(right)


# ============= STATISTICS =============

def test_wilson_interval():
    assert StatsService.wilson_interval(0, 0) == (0.0, 1.0)
    low, high = StatsService.wilson_interval(50, 100)
    assert low == pytest.approx(1 - high)
    assert 0.39 < low < 0.41


def test_convention_split():
    split = StatsService.convention_split([OutcomeLabel.BOURGEOIS, OutcomeLabel.PARADOXICAL, OutcomeLabel.PARADOXICAL,
                                           OutcomeLabel.NETWORK])
    assert split["paradoxical_fraction"] == pytest.approx(2 / 3)
    assert split["n_bourgeois"] == 1


def test_point_trend():
    table = pd.DataFrame({"y2": [0.2, 0.3, 0.4, 0.5], "prop_paradoxical": [0.1, 0.2, 0.35, 0.6]})
    assert SweepService.point_trend(table) == pytest.approx(1.0)


def test_no_network_sweep_keeps_partner_weights():
    spec = tiny_spec(seeds=1)
    spec = spec.model_copy(update={"base": spec.base.model_copy(update={"mode": UpdateMode.NO_NETWORK})})
    job = SweepService.generate_grid(spec)[0]
    result = EngineService.run_simulation(SweepService.job_config(spec, job))
    assert (result.population.partner_weights == EngineService.init_population(result.config).partner_weights).all()
