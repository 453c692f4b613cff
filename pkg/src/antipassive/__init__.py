"""Passivity analysis of linear systems and of evolutionary game feedback loops."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("antipassive")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .destabilizer import construct_passive_destabilizer
from .dynamics import DynamicState, linearize, reduce_dynamics
from .lti import StateSpaceSystem, cayley_G_to_S, cayley_S_to_R, feedback_interconnect, hinf_norm, is_hurwitz, is_passive
from .population import HigherOrderGame, build_tangent_basis, check_game_antipassive, paper_logit_game, paper_replicator_game
from .sim import IntegratorConfig, ScenarioConfig, integrate, run_scenario

__all__ = [
    "DynamicState",
    "HigherOrderGame",
    "IntegratorConfig",
    "ScenarioConfig",
    "StateSpaceSystem",
    "build_tangent_basis",
    "cayley_G_to_S",
    "cayley_S_to_R",
    "check_game_antipassive",
    "construct_passive_destabilizer",
    "feedback_interconnect",
    "hinf_norm",
    "integrate",
    "is_hurwitz",
    "is_passive",
    "linearize",
    "paper_logit_game",
    "paper_replicator_game",
    "reduce_dynamics",
    "run_scenario",
]
