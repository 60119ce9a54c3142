"""Coalitional better-response dynamics for finite games and network formation games."""

from .chain import (
    DEFAULT_SWEEP,
    DynamicsConfig,
    ResistanceAnalysis,
    StableSetReport,
    StationaryDistribution,
    TransitionMatrix,
    build_perturbed,
    build_unperturbed,
    resistance_analysis,
    simulate,
    stationary,
    stochastically_stable_set,
)
from .deviation import ImprovementMode, erroneous_set, improving_set, reachable_profiles
from .equilibrium import (
    CLOSED_CYCLE,
    EQUILIBRIUM,
    DeviationGraph,
    DominanceReport,
    RecurrentStructure,
    build_deviation_graph,
    dominance,
    dominance_2x2,
    equilibria_consistency_check,
    find_equilibria_scan,
    improving_path,
    recurrent_structure,
    to_dot,
)
from .errors import (
    CapExceededError,
    CBRError,
    ConfigError,
    EpsilonRangeError,
    GameValidationError,
    GrammarError,
)
from .game import Game, enumerate_coalitions, enumerate_profiles, validate_game
from .gameio import load_game, parse_game_file
from .netform import (
    Network,
    NetworkGame,
    find_strongly_stable,
    netgame_as_chain,
    network_improving_set,
    network_reachable,
    network_recurrent_structure,
    obtainable,
)

__version__ = "0.1.0"

__all__ = [
    "build_deviation_graph",
    "build_perturbed",
    "build_unperturbed",
    "CapExceededError",
    "CBRError",
    "CLOSED_CYCLE",
    "ConfigError",
    "DEFAULT_SWEEP",
    "DeviationGraph",
    "dominance",
    "dominance_2x2",
    "DominanceReport",
    "DynamicsConfig",
    "enumerate_coalitions",
    "enumerate_profiles",
    "EpsilonRangeError",
    "equilibria_consistency_check",
    "EQUILIBRIUM",
    "erroneous_set",
    "find_equilibria_scan",
    "find_strongly_stable",
    "Game",
    "GameValidationError",
    "GrammarError",
    "ImprovementMode",
    "improving_path",
    "improving_set",
    "load_game",
    "netgame_as_chain",
    "Network",
    "network_improving_set",
    "network_reachable",
    "network_recurrent_structure",
    "NetworkGame",
    "obtainable",
    "parse_game_file",
    "reachable_profiles",
    "recurrent_structure",
    "RecurrentStructure",
    "resistance_analysis",
    "ResistanceAnalysis",
    "simulate",
    "StableSetReport",
    "stationary",
    "StationaryDistribution",
    "stochastically_stable_set",
    "to_dot",
    "TransitionMatrix",
    "validate_game",
]
