"""
Service for network structure: homogeneity, degree distributions and random baselines
"""
import logging
from typing import Optional

import networkx as nx
import numpy as np
import pandas as pd
from scipy.stats import entropy

from conflict_network.config import settings
from conflict_network.models import DegreeHistogram, Population, TieRule, TieRuleKind
from .engine_service import EngineService

logger = logging.getLogger(__name__)


class NetworkService:
    """Service for weighted visit networks"""

    @staticmethod
    def network_homogeneity(population: Population, epsilon: float = 0.0) -> float:
        """Entropy of the pooled visit distribution divided by log(N); 1 means uniform"""
        expected = EngineService.expected_visitors(population, epsilon)
        n = population.n
        value = entropy(expected / n) / np.log(n)
        return float(min(1.0, value))

    @staticmethod
    def degree_distribution(
        population: Population,
        tie_rule: Optional[TieRule] = None,
        epsilon: float = 0.0,
    ) -> DegreeHistogram:
        """
        Histogram of node degrees of the visit network.

        Args:
            population: weights to read
            tie_rule: expected visitors binned by `bin_width`, or binary in-ties
                where Pr(i visits j) >= threshold / (N - 1)
            epsilon: error rate mixed into visit probabilities

        Returns:
            DegreeHistogram over all N nodes
        """
        rule = tie_rule or TieRule()
        n = population.n
        probabilities, _ = EngineService.probability_matrix(population.partner_weights, epsilon, exclude_self=True)

        if rule.kind is TieRuleKind.BINARY_THRESHOLD:
            cutoff = rule.threshold / (n - 1) - settings.TIE_TOLERANCE
            in_degree = (probabilities >= cutoff).sum(axis=0)
            counts = np.bincount(in_degree, minlength=n)
            return DegreeHistogram(
                bin_edges=np.arange(n + 1, dtype=float).tolist(),
                counts=counts.astype(float).tolist(),
                source=f"binary_threshold(c={rule.threshold})",
            )

        expected = probabilities.sum(axis=0)
        edges = np.arange(0.0, n + rule.bin_width, rule.bin_width)
        counts, edges = np.histogram(expected, bins=edges)
        return DegreeHistogram(
            bin_edges=edges.tolist(),
            counts=counts.astype(float).tolist(),
            source=f"expected_visitors(bin_width={rule.bin_width})",
        )

    @staticmethod
    def erdos_renyi_degree_baseline(
        n: int,
        p: float,
        samples: int,
        rng: np.random.Generator,
    ) -> DegreeHistogram:
        """Mean in-degree histogram over `samples` directed G(n, p) graphs"""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Edge probability must be in [0, 1], got {p}")
        if samples < 1:
            raise ValueError(f"At least one sample is required, got {samples}")

        totals = np.zeros(n)
        for _ in range(samples):
            graph = nx.gnp_random_graph(n, p, seed=int(rng.integers(2 ** 32)), directed=True)
            degrees = np.fromiter((d for _, d in graph.in_degree()), dtype=np.int64, count=n)
            totals += np.bincount(degrees, minlength=n)

        return DegreeHistogram(
            bin_edges=np.arange(n + 1, dtype=float).tolist(),
            counts=(totals / samples).tolist(),
            source=f"erdos_renyi(n={n}, p={p}, samples={samples})",
        )

    @staticmethod
    def matched_edge_probability(histogram: DegreeHistogram) -> float:
        """G(n, p) edge probability with the same mean degree"""
        n = len(histogram.counts)
        if n < 2:
            return 0.0
        return min(1.0, histogram.mean_degree() / (n - 1))

    @staticmethod
    def tail_mass(histogram: DegreeHistogram, threshold: float) -> float:
        """Fraction of nodes whose degree bin starts above threshold"""
        if histogram.total == 0:
            return 0.0
        left = np.asarray(histogram.bin_edges[:-1])
        counts = np.asarray(histogram.counts)
        return float(counts[left > threshold].sum() / histogram.total)

    @staticmethod
    def heavy_tail_excess(histogram: DegreeHistogram, baseline: DegreeHistogram, factor: float = 3.0) -> float:
        """Tail mass above factor x mean degree, simulated minus baseline"""
        threshold = factor * histogram.mean_degree()
        return NetworkService.tail_mass(histogram, threshold) - NetworkService.tail_mass(baseline, threshold)

    @staticmethod
    def edge_list(population: Population, epsilon: float) -> pd.DataFrame:
        """Directed weighted edges (from, to, weight, probability) without self-loops"""
        probabilities, _ = EngineService.probability_matrix(population.partner_weights, epsilon, exclude_self=True)
        n = population.n
        sources, targets = np.nonzero(~np.eye(n, dtype=bool))
        return pd.DataFrame(
            {
                "from": sources,
                "to": targets,
                "weight": population.partner_weights[sources, targets],
                "probability": probabilities[sources, targets],
            }
        )

    @staticmethod
    def histogram_frame(histogram: DegreeHistogram) -> pd.DataFrame:
        """Tabular form of a histogram"""
        return pd.DataFrame(
            {
                "bin_start": histogram.bin_edges[:-1],
                "bin_end": histogram.bin_edges[1:],
                "count": histogram.counts,
            }
        )
