"""Taboo-foraging Markov game, recurrent actor-critic learner, and the
group-level metrics/statistics pipeline."""

from .config import (
    CONDITION_IMPORTANT,
    CONDITION_IMPORTANT_PLUS_SILLY,
    CONDITION_NONE,
    CONDITIONS,
    ConfigError,
    EnvConfig,
    RuleSet,
    desk_env_config,
    make_rules,
    paper_env_config,
)
from .env import Action, EpisodeFinished, ForageEnv, NUM_ACTIONS

__all__ = [
    "Action",
    "CONDITIONS",
    "CONDITION_IMPORTANT",
    "CONDITION_IMPORTANT_PLUS_SILLY",
    "CONDITION_NONE",
    "ConfigError",
    "EnvConfig",
    "EpisodeFinished",
    "ForageEnv",
    "NUM_ACTIONS",
    "RuleSet",
    "desk_env_config",
    "make_rules",
    "paper_env_config",
]

__version__ = "0.1.0"
