"""Reward inference from a learning agent: predictors, learner models, measures and bound checks."""
from .env import Mdp, QTable, RewardTable, boltzmann_policy, finite_horizon_optimal_return, solve_q_star
from .errors import ConfigError, DivergentMdpError, InvalidArgumentError, NotYetExploredError
from .harness import ExperimentConfig, RunRecord, load_config, parse_config, run_experiment, simulate, sweep
from .learners import EstimateSchedule, InteractionHistory, LearnerModel
from .predictors import PredictionTrace

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DivergentMdpError", "EstimateSchedule", "ExperimentConfig", "InteractionHistory",
    "InvalidArgumentError", "LearnerModel", "Mdp", "NotYetExploredError", "PredictionTrace", "QTable",
    "RewardTable", "RunRecord", "boltzmann_policy", "finite_horizon_optimal_return", "load_config",
    "parse_config", "run_experiment", "simulate", "solve_q_star", "sweep",
]
