"""
Simulation engine: Roth-Erev learning of strategies and partner ties

Random stream contract: every round owns an independent Philox4x64 stream
keyed by the run seed (counter word 1 = round index). A round consumes
N partner uniforms in ascending agent order, then for each visit in
ascending visitor order one visitor-strategy uniform and one host-strategy
uniform. Random initial weights come from a separate stream (counter word 2 = 1).
"""
import logging
import math
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from conflict_network.config import settings
from conflict_network.models import (
    Population,
    Role,
    RoundResult,
    RunDiagnostics,
    SimConfig,
    SimulationResult,
    Snapshot,
    StrategyInit,
    UpdateMode,
)
from .game_service import GameService

logger = logging.getLogger(__name__)

HAWK = 0
DOVE = 1

SUMMARY_COLUMNS = [
    "round_start",
    "round_end",
    "host_hawk",
    "host_dove",
    "visitor_hawk",
    "visitor_dove",
    "mean_host_payoff",
    "mean_visitor_payoff",
]


@lru_cache(maxsize=256)
def _root_key(seed: int) -> Tuple[int, int]:
    state = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _stream(seed: int, word1: int, word2: int) -> np.random.Generator:
    key = np.array(_root_key(seed), dtype=np.uint64)
    counter = np.array([0, word1, word2, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class EngineService:
    """Round-based coevolution of strategy weights and network ties"""

    # ============= RANDOM STREAMS =============

    @staticmethod
    def round_generator(seed: int, round_index: int) -> np.random.Generator:
        """Independent generator for one round of a run"""
        if round_index < 0:
            raise ValueError(f"round_index must be >= 0, got {round_index}")
        return _stream(seed, round_index, 0)

    @staticmethod
    def init_generator(seed: int) -> np.random.Generator:
        """Generator used for random initial strategy weights"""
        return _stream(seed, 0, 1)

    # ============= LEARNING RULE =============

    @staticmethod
    def probability_matrix(
        weights: np.ndarray,
        epsilon: float,
        exclude_self: bool = False,
    ) -> Tuple[np.ndarray, int]:
        """
        Row-wise choice probabilities proportional to weights, mixed with errors.

        Args:
            weights: (rows, options) nonnegative weights
            epsilon: error rate spread uniformly over the available options
            exclude_self: drop option i from row i (partner choice)

        Returns:
            (probabilities, number of rows whose weight sum underflowed)
        """
        w = np.asarray(weights, dtype=np.float64)
        available = np.ones(w.shape, dtype=bool)
        if exclude_self:
            np.fill_diagonal(available, False)
            w = np.where(available, w, 0.0)

        n_options = available.sum(axis=1, keepdims=True)
        uniform = available / n_options
        total = w.sum(axis=1, keepdims=True)
        underflow = total[:, 0] < settings.UNDERFLOW_THRESHOLD
        learned = w / np.where(underflow[:, None], 1.0, total)
        learned = np.where(underflow[:, None], uniform, learned)
        return (1.0 - epsilon) * learned + epsilon * uniform, int(underflow.sum())

    @staticmethod
    def action_probabilities(
        weights: np.ndarray,
        epsilon: float,
        exclude: Optional[int] = None,
    ) -> np.ndarray:
        """Choice probabilities for one agent in one context

        `exclude` removes an option from the choice set (the agent itself
        when choosing whom to visit).
        """
        w = np.asarray(weights, dtype=np.float64).copy()
        available = np.ones(w.shape, dtype=bool)
        if exclude is not None:
            available[exclude] = False
            w[exclude] = 0.0
        uniform = available / available.sum()
        total = w.sum()
        if total < settings.UNDERFLOW_THRESHOLD:
            logger.warning("Weight sum underflowed; falling back to uniform choice")
            learned = uniform
        else:
            learned = w / total
        return (1.0 - epsilon) * learned + epsilon * uniform

    @staticmethod
    def reinforce(weights: np.ndarray, chosen: int, payoff: float, delta: float) -> np.ndarray:
        """Discount the whole vector, then add the payoff to the chosen entry"""
        updated = (1.0 - delta) * np.asarray(weights, dtype=np.float64)
        updated[chosen] += payoff
        return updated

    @staticmethod
    def _reinforce_many(
        weights: np.ndarray,
        owners: np.ndarray,
        choices: np.ndarray,
        payoffs: np.ndarray,
        delta: float,
    ) -> None:
        """Apply `reinforce` once per event, in place.

        Events of the same owner are applied in the order they appear, so a
        host with k visitors is discounted k times.
        """
        keep = 1.0 - delta
        counts = np.bincount(owners, minlength=weights.shape[0])
        order = np.argsort(owners, kind="stable")
        starts = np.cumsum(counts) - counts
        position = np.empty_like(owners)
        position[order] = np.arange(len(owners)) - starts[owners[order]]
        later_updates = counts[owners] - 1 - position

        weights *= (keep ** counts)[:, None]
        np.add.at(weights, (owners, choices), payoffs * keep ** later_updates)

    @staticmethod
    def _draw(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """Inverse-CDF draw per row; never returns a zero-probability option"""
        cumulative = np.cumsum(probabilities, axis=1)
        picked = (uniforms[:, None] >= cumulative).sum(axis=1)
        n_options = probabilities.shape[1]
        last_possible = n_options - 1 - np.argmax(probabilities[:, ::-1] > 0, axis=1)
        return np.minimum(picked, last_possible)

    # ============= POPULATION =============

    @staticmethod
    def init_population(config: SimConfig, rng: Optional[np.random.Generator] = None) -> Population:
        """Initial weights: L/(N-1) partner ties and S (or random) strategy weights"""
        n = config.n
        if n < 2:
            raise ValueError(f"Population size must be at least 2, got {n}")

        partner = np.full((n, n), config.network_scale / (n - 1))
        np.fill_diagonal(partner, 0.0)

        scale = config.strategy_scale
        if config.strategy_init is StrategyInit.RANDOM:
            rng = rng or EngineService.init_generator(config.seed)
            # 1 - U[0,1) keeps every weight strictly positive
            host = 2.0 * scale * (1.0 - rng.random((n, 2)))
            visitor = 2.0 * scale * (1.0 - rng.random((n, 2)))
        else:
            host = np.full((n, 2), scale)
            visitor = np.full((n, 2), scale)

        if config.mode is UpdateMode.SYMMETRIC:
            visitor = host.copy()

        return Population(host_weights=host, visitor_weights=visitor, partner_weights=partner)

    @staticmethod
    def expected_visitors(population: Population, epsilon: float) -> np.ndarray:
        """Sum over agents of the probability of visiting each node"""
        probabilities, _ = EngineService.probability_matrix(
            population.partner_weights, epsilon, exclude_self=True
        )
        return probabilities.sum(axis=0)

    # ============= ROUNDS =============

    @staticmethod
    def run_round(
        population: Population,
        config: SimConfig,
        rng: np.random.Generator,
        round_index: int = 0,
        in_place: bool = False,
    ) -> Tuple[Population, RoundResult]:
        """
        Play one round: every agent visits one other agent, then all weights update.

        All decisions use start-of-round weights; updates follow the update mode.

        Returns:
            (updated population, the round's interactions)
        """
        pop = population if in_place else population.copy()
        n = pop.n
        eps = config.epsilon

        partner_uniforms = rng.random(n)
        strategy_uniforms = rng.random((n, 2))

        underflow = 0
        if config.mode is UpdateMode.NO_NETWORK:
            partner_probs, _ = EngineService.probability_matrix(np.ones((n, n)), 0.0, exclude_self=True)
        else:
            partner_probs, underflow = EngineService.probability_matrix(
                pop.partner_weights, eps, exclude_self=True
            )
        hosts = EngineService._draw(partner_probs, partner_uniforms)

        visit_probs, under_v = EngineService.probability_matrix(pop.visitor_weights, eps)
        host_probs, under_h = EngineService.probability_matrix(pop.host_weights, eps)
        underflow += under_v + under_h

        visitor_strategies = np.where(strategy_uniforms[:, 0] < visit_probs[:, HAWK], HAWK, DOVE)
        host_strategies = np.where(strategy_uniforms[:, 1] < host_probs[hosts, HAWK], HAWK, DOVE)

        host_table = GameService.payoff_table(Role.HOST, config.payoffs)
        visitor_table = GameService.payoff_table(Role.VISITOR, config.payoffs)
        visitor_payoffs = visitor_table[visitor_strategies, host_strategies]
        host_payoffs = host_table[host_strategies, visitor_strategies]

        visitors = np.arange(n)
        delta = config.delta

        if config.mode is UpdateMode.SYMMETRIC:
            # one event list per context, ordered by interaction (= visitor index)
            owners = np.concatenate([visitors, hosts])
            order = np.argsort(np.concatenate([visitors, visitors]), kind="stable")
            owners = owners[order]

            strategy_choices = np.concatenate([visitor_strategies, host_strategies])[order]
            strategy_payoffs = np.concatenate([visitor_payoffs, host_payoffs])[order]
            EngineService._reinforce_many(pop.host_weights, owners, strategy_choices, strategy_payoffs, delta)
            pop.visitor_weights[:] = pop.host_weights

            partner_choices = np.concatenate([hosts, visitors])[order]
            EngineService._reinforce_many(pop.partner_weights, owners, partner_choices, strategy_payoffs, delta)
        else:
            EngineService._reinforce_many(pop.visitor_weights, visitors, visitor_strategies, visitor_payoffs, delta)
            EngineService._reinforce_many(pop.host_weights, hosts, host_strategies, host_payoffs, delta)
            if config.mode is UpdateMode.ASYMMETRIC:
                EngineService._reinforce_many(pop.partner_weights, visitors, hosts, visitor_payoffs, delta)

        result = RoundResult(
            round_index=round_index,
            hosts=hosts,
            visitor_strategies=visitor_strategies,
            host_strategies=host_strategies,
            visitor_payoffs=visitor_payoffs,
            host_payoffs=host_payoffs,
            underflow_events=underflow,
        )
        return pop, result

    @staticmethod
    def take_snapshot(round_index: int, population: Population, epsilon: float) -> Snapshot:
        """Copy weights and derive epsilon-free and epsilon-inclusive probabilities"""
        host_free, _ = EngineService.probability_matrix(population.host_weights, 0.0)
        visit_free, _ = EngineService.probability_matrix(population.visitor_weights, 0.0)
        host_eps, _ = EngineService.probability_matrix(population.host_weights, epsilon)
        visit_eps, _ = EngineService.probability_matrix(population.visitor_weights, epsilon)
        return Snapshot(
            round=round_index,
            epsilon=epsilon,
            host_weights=population.host_weights.copy(),
            visitor_weights=population.visitor_weights.copy(),
            partner_weights=population.partner_weights.copy(),
            p_hawk_host=host_free[:, HAWK],
            p_hawk_visit=visit_free[:, HAWK],
            p_hawk_host_eps=host_eps[:, HAWK],
            p_hawk_visit_eps=visit_eps[:, HAWK],
            expected_visitors=EngineService.expected_visitors(population, epsilon),
        )

    @staticmethod
    def run_simulation(
        config: SimConfig,
        on_snapshot: Optional[Callable[[Snapshot], None]] = None,
        keep_snapshots: bool = True,
    ) -> SimulationResult:
        """
        Execute `config.rounds` rounds and collect snapshots and summaries.

        Snapshots are taken at round 0, every `snapshot_every` rounds and at
        the final round. Identical configs give bit-identical results.

        Args:
            config: resolved simulation config
            on_snapshot: called with every snapshot as it is taken
            keep_snapshots: retain snapshots in the result
        """
        logger.info(
            f"Starting run: n={config.n}, mode={config.mode.value}, rounds={config.rounds}, "
            f"delta={config.delta}, epsilon={config.epsilon}, seed={config.seed}"
        )
        population = EngineService.init_population(config)
        diagnostics = RunDiagnostics()
        snapshots: List[Snapshot] = []

        def capture(round_index: int) -> None:
            snapshot = EngineService.take_snapshot(round_index, population, config.epsilon)
            if on_snapshot is not None:
                on_snapshot(snapshot)
            if keep_snapshots:
                snapshots.append(snapshot)

        n_blocks = math.ceil(config.rounds / config.summary_every)
        counts = np.zeros((n_blocks, 4), dtype=np.int64)
        payoff_sums = np.zeros((n_blocks, 2))
        block_rounds = np.zeros(n_blocks, dtype=np.int64)

        capture(0)
        for r in range(config.rounds):
            rng = EngineService.round_generator(config.seed, r)
            population, result = EngineService.run_round(population, config, rng, round_index=r, in_place=True)

            block = r // config.summary_every
            host_hawk = int(np.count_nonzero(result.host_strategies == HAWK))
            visitor_hawk = int(np.count_nonzero(result.visitor_strategies == HAWK))
            counts[block] += (host_hawk, config.n - host_hawk, visitor_hawk, config.n - visitor_hawk)
            payoff_sums[block] += (result.host_payoffs.sum(), result.visitor_payoffs.sum())
            block_rounds[block] += 1

            diagnostics.underflow_events += result.underflow_events
            diagnostics.max_host_sum = max(diagnostics.max_host_sum, float(population.host_weights.sum(axis=1).max()))
            diagnostics.max_visitor_sum = max(
                diagnostics.max_visitor_sum, float(population.visitor_weights.sum(axis=1).max())
            )
            diagnostics.max_partner_sum = max(
                diagnostics.max_partner_sum, float(population.partner_weights.sum(axis=1).max())
            )

            completed = r + 1
            if completed % config.snapshot_every == 0 or completed == config.rounds:
                capture(completed)

        diagnostics.rounds = config.rounds
        if diagnostics.underflow_events:
            logger.warning(f"{diagnostics.underflow_events} weight-sum underflow events fell back to uniform choice")

        starts = np.arange(n_blocks) * config.summary_every
        interactions = np.maximum(block_rounds, 1) * config.n
        summary = pd.DataFrame(
            {
                "round_start": starts,
                "round_end": starts + block_rounds,
                "host_hawk": counts[:, 0],
                "host_dove": counts[:, 1],
                "visitor_hawk": counts[:, 2],
                "visitor_dove": counts[:, 3],
                "mean_host_payoff": payoff_sums[:, 0] / interactions,
                "mean_visitor_payoff": payoff_sums[:, 1] / interactions,
            },
            columns=SUMMARY_COLUMNS,
        )

        logger.info(f"Run finished after {config.rounds} rounds ({len(snapshots)} snapshots kept)")
        return SimulationResult(
            config=config,
            population=population,
            snapshots=snapshots,
            summary=summary,
            diagnostics=diagnostics,
        )
