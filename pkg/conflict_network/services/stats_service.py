"""
Service for outcome statistics across runs
"""
import logging
from collections import Counter
from typing import Dict, Iterable, Sequence, Tuple

from scipy.stats import binomtest, spearmanr

from conflict_network.models import OutcomeLabel

logger = logging.getLogger(__name__)


class StatsService:
    """Service for statistics and analytics"""

    @staticmethod
    def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
        """Wilson score interval for a binomial proportion"""
        if trials == 0:
            return 0.0, 1.0
        interval = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
        return float(interval.low), float(interval.high)

    @staticmethod
    def label_counts(labels: Iterable[OutcomeLabel]) -> Dict[OutcomeLabel, int]:
        """Count of every outcome label, zeros included"""
        counts = Counter(labels)
        return {label: counts.get(label, 0) for label in OutcomeLabel}

    @staticmethod
    def convention_split(labels: Iterable[OutcomeLabel]) -> Dict[str, float]:
        """
        Paradoxical share among runs that reached a convention.

        Returns:
            n_bourgeois, n_paradoxical, paradoxical_fraction and its Wilson bounds
        """
        counts = StatsService.label_counts(labels)
        n_bourgeois = counts[OutcomeLabel.BOURGEOIS]
        n_paradoxical = counts[OutcomeLabel.PARADOXICAL]
        conventions = n_bourgeois + n_paradoxical
        low, high = StatsService.wilson_interval(n_paradoxical, conventions)
        return {
            "n_bourgeois": n_bourgeois,
            "n_paradoxical": n_paradoxical,
            "paradoxical_fraction": n_paradoxical / conventions if conventions else float("nan"),
            "ci_low": low,
            "ci_high": high,
        }

    @staticmethod
    def spearman_trend(xs: Sequence[float], ys: Sequence[float]) -> float:
        """Spearman rank correlation of ys against xs"""
        if len(xs) != len(ys):
            raise ValueError("xs and ys must have the same length")
        rho, _ = spearmanr(xs, ys)
        return float(rho)
