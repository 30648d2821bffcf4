"""
Services initialization
"""
from .game_service import GameService
from .engine_service import EngineService
from .classification_service import ClassificationService
from .network_service import NetworkService
from .stats_service import StatsService
from .sweep_service import SweepService, SweepTally

__all__ = [
    'GameService',
    'EngineService',
    'ClassificationService',
    'NetworkService',
    'StatsService',
    'SweepService',
    'SweepTally',
]
