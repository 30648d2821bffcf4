"""
Service for hawk-dove payoffs and closed-form reference points
"""
from typing import Tuple

import numpy as np

from conflict_network.models import ConventionKind, GamePayoffs, Role, Strategy


class GameService:
    """Payoff functions of games of conflict"""

    @staticmethod
    def payoff(own: Strategy, opponent: Strategy, role: Role, game: GamePayoffs) -> float:
        """Payoff to a player in `role` playing `own` against `opponent`

        Hawk/Hawk is 0 and Hawk/Dove is 1 in both roles; only the dove
        payoffs (x against hawk, y against dove) depend on the role.
        """
        if own is Strategy.HAWK:
            return 0.0 if opponent is Strategy.HAWK else 1.0
        x, y = game.dove_payoffs(role)
        return x if opponent is Strategy.HAWK else y

    @staticmethod
    def payoff_table(role: Role, game: GamePayoffs) -> np.ndarray:
        """2x2 array indexed [own, opponent] with Hawk at index 0"""
        x, y = game.dove_payoffs(role)
        return np.array([[0.0, 1.0], [x, y]])

    @staticmethod
    def mixed_nash(game: GamePayoffs) -> Tuple[float, float]:
        """Dove probabilities of host and visitor at the mixed Nash equilibrium"""
        p_host = game.x1 / (1.0 - game.y1 + game.x1)
        p_visitor = game.x2 / (1.0 - game.y2 + game.x2)
        return p_host, p_visitor

    @staticmethod
    def convention_payoffs(game: GamePayoffs, kind: ConventionKind) -> Tuple[float, float]:
        """(host payoff, visitor payoff) once a convention is established"""
        if kind is ConventionKind.BOURGEOIS:
            return 1.0, game.x2
        return game.x1, 1.0

    @staticmethod
    def expected_payoff(strategy: Strategy, p_dove_opponent: float, role: Role, game: GamePayoffs) -> float:
        """Expected payoff of a pure strategy against an opponent playing dove with p_dove_opponent"""
        return (
            p_dove_opponent * GameService.payoff(strategy, Strategy.DOVE, role, game)
            + (1.0 - p_dove_opponent) * GameService.payoff(strategy, Strategy.HAWK, role, game)
        )
