"""
Service for classifying agents, populations and trajectories into solution families
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from conflict_network.models import (
    AgentClass,
    AgentProfile,
    ClassifierThresholds,
    GamePayoffs,
    OutcomeLabel,
    Population,
    Snapshot,
    TrajectoryLabel,
)
from .engine_service import HAWK, EngineService
from .game_service import GameService

logger = logging.getLogger(__name__)


class ClassificationService:
    """Service for solution-family classification

    Everything here reads learned weights with epsilon = 0.
    """

    @staticmethod
    def behavior(population: Population) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Epsilon-free behavior of every agent.

        Returns:
            (p_hawk_host, p_hawk_visit, expected_visitors, partner probability matrix)
        """
        host, _ = EngineService.probability_matrix(population.host_weights, 0.0)
        visit, _ = EngineService.probability_matrix(population.visitor_weights, 0.0)
        partner, _ = EngineService.probability_matrix(population.partner_weights, 0.0, exclude_self=True)
        return host[:, HAWK], visit[:, HAWK], partner.sum(axis=0), partner

    @staticmethod
    def agent_profiles(population: Population) -> List[AgentProfile]:
        """Per-agent profiles"""
        p_host, p_visit, expected, partner = ClassificationService.behavior(population)
        concentration = partner.max(axis=1)
        return [
            AgentProfile(
                p_hawk_host=float(p_host[i]),
                p_hawk_visit=float(p_visit[i]),
                expected_visitors=float(expected[i]),
                partner_concentration=float(concentration[i]),
            )
            for i in range(population.n)
        ]

    @staticmethod
    def classify_agent(profile: AgentProfile, thresholds: ClassifierThresholds) -> AgentClass:
        """Place one agent into one of the five behavioral classes"""
        return ClassificationService._agent_class(profile.p_hawk_host, profile.p_hawk_visit, thresholds)

    @staticmethod
    def _agent_class(p_hawk_host: float, p_hawk_visit: float, thresholds: ClassifierThresholds) -> AgentClass:
        # dove side as 1 - p >= theta so p = 1 - theta counts
        theta = thresholds.theta_s
        hawk_host, hawk_visit = p_hawk_host >= theta, p_hawk_visit >= theta
        dove_host, dove_visit = 1.0 - p_hawk_host >= theta, 1.0 - p_hawk_visit >= theta
        if hawk_host and dove_visit:
            return AgentClass.BOURGEOIS_AGENT
        if dove_host and hawk_visit:
            return AgentClass.PARADOXICAL_AGENT
        if hawk_host and hawk_visit:
            return AgentClass.PURE_HAWK
        if dove_host and dove_visit:
            return AgentClass.PURE_DOVE
        return AgentClass.MIXED

    @staticmethod
    def agent_classes(population: Population, thresholds: ClassifierThresholds) -> List[AgentClass]:
        p_host, p_visit, _, _ = ClassificationService.behavior(population)
        return [
            ClassificationService._agent_class(float(h), float(v), thresholds)
            for h, v in zip(p_host, p_visit)
        ]

    @staticmethod
    def hubs(population: Population, thresholds: ClassifierThresholds) -> np.ndarray:
        """Indices of agents whose expected visitors reach hub_factor"""
        _, _, expected, _ = ClassificationService.behavior(population)
        return np.flatnonzero(expected >= thresholds.hub_factor)

    @staticmethod
    def classify_population(
        population: Population,
        thresholds: Optional[ClassifierThresholds] = None,
    ) -> OutcomeLabel:
        """
        Label a population state with its solution family.

        Conventions need a θ_p majority of matching agents on a homogeneous
        network. Hub solutions need dove-hosting hubs and a θ_p majority of
        pure-hawk spokes visiting them; Hybrid when every hub is paradoxical.
        """
        t = thresholds or ClassifierThresholds()
        p_host, p_visit, expected, partner = ClassificationService.behavior(population)
        classes = [ClassificationService._agent_class(float(h), float(v), t) for h, v in zip(p_host, p_visit)]
        is_class = {c: np.array([k is c for k in classes], dtype=bool) for c in AgentClass}
        n = population.n
        homogeneous = expected.max() <= t.homog_max

        if homogeneous and np.count_nonzero(is_class[AgentClass.BOURGEOIS_AGENT]) >= t.theta_p * n:
            return OutcomeLabel.BOURGEOIS
        if homogeneous and np.count_nonzero(is_class[AgentClass.PARADOXICAL_AGENT]) >= t.theta_p * n:
            return OutcomeLabel.PARADOXICAL

        hub_mask = expected >= t.hub_factor
        if not hub_mask.any() or hub_mask.all():
            return OutcomeLabel.UNRESOLVED
        if np.any(1.0 - p_host[hub_mask] < t.theta_s):
            return OutcomeLabel.UNRESOLVED

        spokes = ~hub_mask
        mass_on_hubs = partner[np.ix_(spokes, hub_mask)].sum(axis=1)
        attached = is_class[AgentClass.PURE_HAWK][spokes] & (mass_on_hubs >= t.theta_s)
        if np.count_nonzero(attached) < t.theta_p * np.count_nonzero(spokes):
            return OutcomeLabel.UNRESOLVED

        if np.all(is_class[AgentClass.PARADOXICAL_AGENT][hub_mask]):
            return OutcomeLabel.HYBRID
        return OutcomeLabel.NETWORK

    @staticmethod
    def population_summary(population: Population, thresholds: ClassifierThresholds) -> Dict[str, object]:
        """Class counts, hubs and label of one state"""
        classes = ClassificationService.agent_classes(population, thresholds)
        _, _, expected, _ = ClassificationService.behavior(population)
        summary: Dict[str, object] = {c.value: classes.count(c) for c in AgentClass}
        summary["label"] = ClassificationService.classify_population(population, thresholds).value
        summary["n_hubs"] = int(np.count_nonzero(expected >= thresholds.hub_factor))
        summary["max_expected_visitors"] = float(expected.max())
        return summary

    @staticmethod
    def distance_from_mixed_nash(population: Population, game: GamePayoffs) -> float:
        """Largest per-agent L-inf distance of (dove host, dove visit) from the mixed Nash point"""
        p_host, p_visit, _, _ = ClassificationService.behavior(population)
        nash_host, nash_visit = GameService.mixed_nash(game)
        distance = np.maximum(np.abs((1.0 - p_host) - nash_host), np.abs((1.0 - p_visit) - nash_visit))
        return float(distance.max())

    # ============= TRAJECTORIES =============

    @staticmethod
    def trajectory_from_labels(labels: Sequence[OutcomeLabel], hub_flags: Sequence[bool]) -> TrajectoryLabel:
        """
        Classify a path of snapshot labels that ends in a convention.

        Args:
            labels: label of each snapshot, in round order
            hub_flags: whether each snapshot contains at least one hub

        Raises:
            ValueError: when the last label is not a convention
        """
        if not labels or not labels[-1].is_convention:
            raise ValueError("Trajectory classification needs a run that ends in a convention")
        if len(labels) != len(hub_flags):
            raise ValueError("labels and hub_flags must have the same length")

        final = labels[-1]
        onset = len(labels) - 1
        while onset > 0 and labels[onset - 1] is final:
            onset -= 1

        before = range(onset)
        if any(labels[k] in (OutcomeLabel.NETWORK, OutcomeLabel.HYBRID) or hub_flags[k] for k in before):
            return TrajectoryLabel.VIA_HUB_SPOKE
        if any(labels[k].is_convention for k in before):
            return TrajectoryLabel.OTHER
        return TrajectoryLabel.DIRECT_TO_CONVENTION

    @staticmethod
    def classify_trajectory(
        snapshots: Sequence[Snapshot],
        thresholds: Optional[ClassifierThresholds] = None,
    ) -> TrajectoryLabel:
        """Label how a run reached its final convention"""
        t = thresholds or ClassifierThresholds()
        labels = []
        hub_flags = []
        for snapshot in snapshots:
            population = snapshot.population
            labels.append(ClassificationService.classify_population(population, t))
            hub_flags.append(ClassificationService.hubs(population, t).size > 0)
        return ClassificationService.trajectory_from_labels(labels, hub_flags)

    @staticmethod
    def rounds_to_classification(rounds: Sequence[int], labels: Sequence[OutcomeLabel]) -> Optional[int]:
        """First snapshot round from which the final label holds to the end"""
        if not labels or labels[-1] is OutcomeLabel.UNRESOLVED:
            return None
        onset = len(labels) - 1
        while onset > 0 and labels[onset - 1] is labels[-1]:
            onset -= 1
        return int(rounds[onset])
