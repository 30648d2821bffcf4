"""
Population builders for hand-crafted fixture states
"""
import numpy as np

from conflict_network.models import AgentState, Population


def make_population(p_hawk_host, p_hawk_visit, partner) -> Population:
    """Population whose epsilon-free probabilities are exactly the given ones"""
    p_host = np.asarray(p_hawk_host, dtype=float)
    p_visit = np.asarray(p_hawk_visit, dtype=float)
    partner = np.array(partner, dtype=float)
    np.fill_diagonal(partner, 0.0)
    return Population.from_agents(
        [
            AgentState(
                host_weights=[h, 1.0 - h],
                visitor_weights=[v, 1.0 - v],
                partner_weights=row.tolist(),
            )
            for h, v, row in zip(p_host.tolist(), p_visit.tolist(), partner)
        ]
    )


def uniform_partners(n: int) -> np.ndarray:
    partner = np.ones((n, n))
    np.fill_diagonal(partner, 0.0)
    return partner


def hub_partners(n: int, hub_of: dict) -> np.ndarray:
    """Uniform partner rows, except agents in `hub_of` put all mass on their hub"""
    partner = uniform_partners(n)
    for agent, hub in hub_of.items():
        partner[agent] = 0.0
        partner[agent, hub] = 1.0
    return partner


def paradoxical_learners(config, rng=None) -> Population:
    """Stand-in for init_population: dove hosts and hawk visitors with zero weight on the other strategy

    With epsilon = 0 the zero-weight strategy is never played, so the
    population keeps its Paradoxical label for the whole run.
    """
    return make_population(np.zeros(config.n), np.ones(config.n), uniform_partners(config.n))
