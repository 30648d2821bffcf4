"""
Pydantic models for simulation configs, population state and analysis records
"""
import math
from datetime import datetime
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

from conflict_network.config import settings


def _as_float_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


# numpy array that round-trips through JSON as nested lists
FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]


# ============= ENUMERATIONS =============

class Strategy(str, Enum):
    """Hawk-dove strategies; index 0 is Hawk in every weight vector"""
    HAWK = "Hawk"
    DOVE = "Dove"

    @property
    def index(self) -> int:
        return 0 if self is Strategy.HAWK else 1

    @classmethod
    def from_index(cls, index: int) -> "Strategy":
        return cls.HAWK if index == 0 else cls.DOVE


class Role(str, Enum):
    """Interaction roles"""
    HOST = "Host"
    VISITOR = "Visitor"


class ConventionKind(str, Enum):
    """Correlated-equilibrium conventions"""
    BOURGEOIS = "Bourgeois"
    PARADOXICAL = "Paradoxical"


class UpdateMode(str, Enum):
    """Which weights learn from an interaction"""
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"
    NO_NETWORK = "no_network"


class StrategyInit(str, Enum):
    """Initial strategy weight scheme"""
    UNIFORM = "uniform"
    RANDOM = "random"


class OutcomeLabel(str, Enum):
    """Solution family of a population state"""
    BOURGEOIS = "Bourgeois"
    PARADOXICAL = "Paradoxical"
    NETWORK = "Network"
    HYBRID = "Hybrid"
    UNRESOLVED = "Unresolved"

    @property
    def is_convention(self) -> bool:
        return self in (OutcomeLabel.BOURGEOIS, OutcomeLabel.PARADOXICAL)


class AgentClass(str, Enum):
    """Behavioral class of a single agent"""
    BOURGEOIS_AGENT = "BourgeoisAgent"
    PARADOXICAL_AGENT = "ParadoxicalAgent"
    PURE_HAWK = "PureHawk"
    PURE_DOVE = "PureDove"
    MIXED = "Mixed"


class TrajectoryLabel(str, Enum):
    """Path a run took towards its final convention"""
    DIRECT_TO_CONVENTION = "DirectToConvention"
    VIA_HUB_SPOKE = "ViaHubSpoke"
    OTHER = "Other"


class TieRuleKind(str, Enum):
    """How weighted visit probabilities become node degrees"""
    EXPECTED_VISITORS = "expected_visitors"
    BINARY_THRESHOLD = "binary_threshold"


class GridKind(str, Enum):
    """Payoff-space grid families"""
    SYMMETRIC_SQUARE = "symmetric_square"
    ASYMMETRIC_SLICE = "asymmetric_slice"
    BIAS_LINE = "bias_line"
    EXPLICIT = "explicit"


# ============= GAME =============

class GamePayoffs(BaseModel):
    """Dove payoffs of a game of conflict; hawk/hawk is 0 and hawk/dove is 1

    Subscript 1 belongs to the host, subscript 2 to the visitor.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    x1: float
    y1: float
    x2: float
    y2: float

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            if len(data) != 4:
                raise ValueError("payoffs list must hold exactly [x1, y1, x2, y2]")
            return dict(zip(("x1", "y1", "x2", "y2"), data))
        return data

    @field_validator("x1", "y1", "x2", "y2")
    @classmethod
    def _open_unit_interval(cls, value: float, info) -> float:
        if not math.isfinite(value) or not 0.0 < value < 1.0:
            raise ValueError(
                f"{info.field_name}={value} violates 0 < {info.field_name} < 1 "
                "(hawk/dove must beat dove/dove and dove/hawk must beat hawk/hawk)"
            )
        return value

    def dove_payoffs(self, role: Role) -> Tuple[float, float]:
        """(dove vs hawk, dove vs dove) for the given role"""
        if role is Role.HOST:
            return self.x1, self.y1
        return self.x2, self.y2

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.x1, self.y1, self.x2, self.y2


# ============= SIMULATION =============

class SimConfig(BaseModel):
    """Fully specified simulation run"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., description="Population size")
    payoffs: GamePayoffs
    delta: float = Field(..., description="Discount rate")
    epsilon: float = Field(..., description="Error rate")
    seed: int = Field(..., description="Root seed of the run")
    mode: UpdateMode = UpdateMode.ASYMMETRIC
    network_scale: float = Field(settings.DEFAULT_NETWORK_SCALE, description="Initial partner-weight mass L")
    strategy_scale: float = Field(settings.DEFAULT_STRATEGY_SCALE, description="Initial strategy weight S")
    strategy_init: StrategyInit = StrategyInit.UNIFORM
    rounds: int = Field(settings.DEFAULT_ROUNDS, ge=0)
    snapshot_every: int = Field(settings.DEFAULT_SNAPSHOT_EVERY, ge=1)
    summary_every: int = Field(1, ge=1, description="Rounds pooled per interaction summary row")

    @field_validator("n")
    @classmethod
    def _population_size(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"n={value} violates n >= 2 (every agent needs someone to visit)")
        return value

    @field_validator("delta")
    @classmethod
    def _discount_rate(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError(f"delta={value} violates delta in [0, 1)")
        return value

    @field_validator("epsilon")
    @classmethod
    def _error_rate(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"epsilon={value} violates epsilon in [0, 1]")
        return value

    @field_validator("network_scale", "strategy_scale")
    @classmethod
    def _positive_scale(cls, value: float, info) -> float:
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"{info.field_name}={value} violates 0 < {info.field_name} < inf")
        return value

    @field_validator("seed")
    @classmethod
    def _u64_seed(cls, value: int) -> int:
        if not 0 <= value < 2 ** 64:
            raise ValueError(f"seed={value} violates 0 <= seed < 2**64")
        return value


class AgentState(BaseModel):
    """Weights of one agent, as plain lists"""
    host_weights: List[float]
    visitor_weights: List[float]
    partner_weights: List[float]


class Population(BaseModel):
    """Weights of every agent

    Rows are agents. Strategy columns are (Hawk, Dove). The partner matrix
    has a zero diagonal.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    host_weights: FloatArray
    visitor_weights: FloatArray
    partner_weights: FloatArray

    @model_validator(mode="after")
    def _shapes(self) -> "Population":
        n = self.partner_weights.shape[0]
        if self.partner_weights.shape != (n, n):
            raise ValueError("partner_weights must be square")
        if self.host_weights.shape != (n, 2) or self.visitor_weights.shape != (n, 2):
            raise ValueError("strategy weights must have shape (n, 2)")
        return self

    @property
    def n(self) -> int:
        return self.partner_weights.shape[0]

    def copy(self) -> "Population":
        return Population(
            host_weights=self.host_weights.copy(),
            visitor_weights=self.visitor_weights.copy(),
            partner_weights=self.partner_weights.copy(),
        )

    def agent(self, i: int) -> AgentState:
        return AgentState(
            host_weights=self.host_weights[i].tolist(),
            visitor_weights=self.visitor_weights[i].tolist(),
            partner_weights=self.partner_weights[i].tolist(),
        )

    @classmethod
    def from_agents(cls, agents: Sequence[AgentState]) -> "Population":
        """Stack per-agent weights into a population; row i is agent i"""
        return cls(
            host_weights=np.array([a.host_weights for a in agents], dtype=np.float64),
            visitor_weights=np.array([a.visitor_weights for a in agents], dtype=np.float64),
            partner_weights=np.array([a.partner_weights for a in agents], dtype=np.float64),
        )


class InteractionRecord(BaseModel):
    """One visit within a round"""
    round_index: int
    visitor: int
    host: int
    visitor_strategy: Strategy
    host_strategy: Strategy
    visitor_payoff: float
    host_payoff: float


class RoundResult(BaseModel):
    """Every visit of one round as parallel arrays, indexed by visitor"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    round_index: int
    hosts: np.ndarray
    visitor_strategies: np.ndarray
    host_strategies: np.ndarray
    visitor_payoffs: np.ndarray
    host_payoffs: np.ndarray
    underflow_events: int = 0

    def records(self) -> List[InteractionRecord]:
        return [
            InteractionRecord(
                round_index=self.round_index,
                visitor=i,
                host=int(self.hosts[i]),
                visitor_strategy=Strategy.from_index(int(self.visitor_strategies[i])),
                host_strategy=Strategy.from_index(int(self.host_strategies[i])),
                visitor_payoff=float(self.visitor_payoffs[i]),
                host_payoff=float(self.host_payoffs[i]),
            )
            for i in range(len(self.hosts))
        ]


class Snapshot(BaseModel):
    """Frozen copy of a population plus derived probabilities"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    round: int
    epsilon: float
    host_weights: FloatArray
    visitor_weights: FloatArray
    partner_weights: FloatArray
    p_hawk_host: FloatArray
    p_hawk_visit: FloatArray
    p_hawk_host_eps: FloatArray
    p_hawk_visit_eps: FloatArray
    expected_visitors: FloatArray

    @property
    def population(self) -> Population:
        return Population(
            host_weights=self.host_weights.copy(),
            visitor_weights=self.visitor_weights.copy(),
            partner_weights=self.partner_weights.copy(),
        )


class RunDiagnostics(BaseModel):
    """Counters collected while a run executes"""
    rounds: int = 0
    underflow_events: int = 0
    max_host_sum: float = 0.0
    max_visitor_sum: float = 0.0
    max_partner_sum: float = 0.0


class SimulationResult(BaseModel):
    """Everything run_simulation hands back"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SimConfig
    population: Population
    snapshots: List[Snapshot] = []
    summary: Any = None  # pandas.DataFrame of InteractionSummary rows
    diagnostics: RunDiagnostics = Field(default_factory=RunDiagnostics)


# ============= ANALYSIS =============

class AgentProfile(BaseModel):
    """Epsilon-free behavioral view of one agent"""
    p_hawk_host: float = Field(..., ge=0, le=1)
    p_hawk_visit: float = Field(..., ge=0, le=1)
    expected_visitors: float = Field(..., ge=0)
    partner_concentration: float = Field(..., ge=0, le=1)


class ClassifierThresholds(BaseModel):
    """Operational thresholds of the solution-family classifier"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    theta_s: float = Field(settings.THETA_S, gt=0.5, le=1.0, description="Strategy purity")
    theta_p: float = Field(settings.THETA_P, gt=0.5, le=1.0, description="Population fraction")
    hub_factor: float = Field(settings.HUB_FACTOR, gt=1.0, description="Expected visitors of a hub")
    homog_max: float = Field(settings.HOMOG_MAX, ge=1.0, description="Max expected visitors when homogeneous")


class TieRule(BaseModel):
    """Degree definition for weighted visit networks"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: TieRuleKind = TieRuleKind.BINARY_THRESHOLD
    threshold: float = Field(2.0, gt=0, description="c: tie iff Pr(i visits j) >= c/(N-1)")
    bin_width: float = Field(1.0, gt=0, description="Bin width for expected visitors")


class DegreeHistogram(BaseModel):
    """Counts of nodes per degree bin; counts may be means over samples"""
    bin_edges: List[float]
    counts: List[float]
    source: str

    @property
    def total(self) -> float:
        return float(sum(self.counts))

    def mean_degree(self) -> float:
        if self.total == 0:
            return 0.0
        return float(np.dot(self.bin_edges[:-1], self.counts) / self.total)


# ============= SWEEP =============

class GridSpec(BaseModel):
    """Payoff grid definition"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: GridKind
    step: float = Field(settings.GRID_STEP, gt=0, lt=0.5)
    host_x: float = Field(0.4, description="x1 of a bias line")
    host_y: float = Field(0.5, description="y1 of a bias line")
    y2_start: float = 0.2
    y2_stop: float = 0.9
    bias_offset: float = Field(0.1, description="x2 = y2 - bias_offset")
    points: List[GamePayoffs] = []


class SweepSpec(BaseModel):
    """Grid of payoff points, seed batch per point and the base run config"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: GridSpec
    seeds_per_point: int = Field(settings.SEEDS_PER_POINT, ge=1)
    base: SimConfig
    thresholds: ClassifierThresholds = ClassifierThresholds()


class SweepJob(BaseModel):
    """One independently re-runnable simulation of a sweep"""
    model_config = ConfigDict(frozen=True)

    point_index: int
    replicate: int
    payoffs: GamePayoffs
    seed: int


class RunRecord(BaseModel):
    """Outcome of one sweep job"""
    model_config = ConfigDict(frozen=True)

    point_index: int
    replicate: int
    payoffs: GamePayoffs
    seed: int
    label: OutcomeLabel
    rounds_to_classification: Optional[int] = None
    homogeneity: Optional[float] = None
    distance_from_mixed_nash: Optional[float] = None
    error: bool = False
    error_message: Optional[str] = None

    @property
    def key(self) -> Tuple[int, int]:
        return self.point_index, self.replicate


# ============= MANIFEST =============

class RunManifest(BaseModel):
    """Resolved config plus provenance of one output directory"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["run", "sweep"]
    tool_version: str
    config_digest: str
    created_at: datetime
    finished_at: Optional[datetime] = None
    config: Union[SimConfig, SweepSpec]
    notes: Dict[str, Any] = {}
