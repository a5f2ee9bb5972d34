"""Environment and experiment configuration.

EnvConfig fixes the physics of one foraging game; RuleSet fixes which berry
types are taboo.  Together they define one experimental condition.  Configs
can be written to / read from a flat ``key = value`` text file so that runs
are reproducible from a single artifact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

CONDITION_NONE = "none"
CONDITION_IMPORTANT = "important"
CONDITION_IMPORTANT_PLUS_SILLY = "important_plus_silly"

CONDITIONS = (CONDITION_NONE, CONDITION_IMPORTANT, CONDITION_IMPORTANT_PLUS_SILLY)

# CLI shorthand accepted for the third condition.
_CONDITION_ALIASES = {
    "silly": CONDITION_IMPORTANT_PLUS_SILLY,
    "important+silly": CONDITION_IMPORTANT_PLUS_SILLY,
}


def canonical_condition(name: str) -> str:
    name = name.strip().lower()
    name = _CONDITION_ALIASES.get(name, name)
    if name not in CONDITIONS:
        raise ConfigError(f"unknown condition {name!r}; expected one of {CONDITIONS}")
    return name


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""


@dataclass(frozen=True)
class EnvConfig:
    """Full parameterization of the foraging game physics."""

    grid_width: int = 33
    grid_height: int = 12
    num_berry_types: int = 24
    poison_delay: int = 100
    players_per_episode: int = 8
    episode_length: int = 1000
    berry_reward: int = 4
    poisoned_berry_reward: int = 1
    beam_cost: int = 20
    punished_penalty: int = 35
    punisher_bounty: int = 35
    respawn_prob: float = 0.05
    berry_sites: int = 48
    beam_range: int = 5
    poisonous_type: int = 0
    silly_type: int = 1
    charge_beam_on_miss: bool = False
    rng_seed: int = 0

    def validate(self) -> "EnvConfig":
        if self.grid_width < 1 or self.grid_height < 1:
            raise ConfigError("grid dimensions must be positive")
        if self.grid_width * self.grid_height < self.berry_sites + self.players_per_episode:
            raise ConfigError(
                f"grid has {self.grid_width * self.grid_height} cells but needs room for "
                f"{self.berry_sites} berry sites + {self.players_per_episode} players"
            )
        # respawn_prob 0 is allowed: it freezes the berry field, which the
        # scripted tests rely on.
        if not (0.0 <= self.respawn_prob <= 1.0):
            raise ConfigError("respawn_prob must be in [0, 1]")
        if self.poison_delay < 1:
            raise ConfigError("poison_delay must be >= 1")
        if not (2 <= self.num_berry_types <= 128):
            raise ConfigError("num_berry_types must be in [2, 128]")
        if not (0 <= self.poisonous_type < self.num_berry_types):
            raise ConfigError("poisonous_type out of range")
        if not (0 <= self.silly_type < self.num_berry_types):
            raise ConfigError("silly_type out of range")
        if self.silly_type == self.poisonous_type:
            raise ConfigError("silly_type must differ from poisonous_type")
        if self.players_per_episode < 1:
            raise ConfigError("need at least one player")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        if self.berry_sites < 1:
            raise ConfigError("need at least one berry site")
        if self.beam_range < 1:
            raise ConfigError("beam_range must be >= 1")
        return self


@dataclass(frozen=True)
class RuleSet:
    """The classification scheme: which berry types are taboo.

    ``wrongful`` is the set of berry-type ids whose consumption marks the
    eater.  The condition tag names one of the three experimental regimes.
    """

    wrongful: frozenset[int] = frozenset()
    condition_tag: str = CONDITION_NONE

    def validate(self, config: EnvConfig) -> "RuleSet":
        if self.condition_tag not in CONDITIONS:
            raise ConfigError(f"unknown condition tag {self.condition_tag!r}")
        expected = {
            CONDITION_NONE: frozenset(),
            CONDITION_IMPORTANT: frozenset({config.poisonous_type}),
            CONDITION_IMPORTANT_PLUS_SILLY: frozenset({config.poisonous_type, config.silly_type}),
        }[self.condition_tag]
        if self.wrongful != expected:
            raise ConfigError(
                f"condition {self.condition_tag!r} requires wrongful={sorted(expected)}, "
                f"got {sorted(self.wrongful)}"
            )
        for t in self.wrongful:
            if not (0 <= t < config.num_berry_types):
                raise ConfigError(f"wrongful berry type {t} out of range")
        return self


def make_rules(condition: str, config: EnvConfig) -> RuleSet:
    """Build the RuleSet for a named condition against a config."""
    condition = canonical_condition(condition)
    if condition == CONDITION_NONE:
        wrongful: frozenset[int] = frozenset()
    elif condition == CONDITION_IMPORTANT:
        wrongful = frozenset({config.poisonous_type})
    else:
        wrongful = frozenset({config.poisonous_type, config.silly_type})
    return RuleSet(wrongful=wrongful, condition_tag=condition).validate(config)


def paper_env_config(**overrides) -> EnvConfig:
    """The standard setting: 33x12 grid, 24 types, 8 players, 1000 steps."""
    return dataclasses.replace(EnvConfig(), **overrides).validate()


def desk_env_config(**overrides) -> EnvConfig:
    """Desk-scale preset: small enough that group dynamics show up in minutes.

    11x8 grid, 8 berry types, 4 players, 200-step episodes, poison delay 30.
    Berry density and respawn are raised so foraging reward stays dense.
    """
    base = EnvConfig(
        grid_width=11,
        grid_height=8,
        num_berry_types=8,
        poison_delay=30,
        players_per_episode=4,
        episode_length=200,
        respawn_prob=0.15,
        berry_sites=16,
        beam_range=5,
    )
    return dataclasses.replace(base, **overrides).validate()


PRESETS = {"paper": paper_env_config, "desk": desk_env_config}

# Non-env knobs carried by each preset (population size, rollout width).
PRESET_RUN_DEFAULTS = {
    "paper": {"population_size": 12, "num_envs": 8},
    "desk": {"population_size": 6, "num_envs": 8},
}

_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_scalar(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in _BOOL_STRINGS:
        return _BOOL_STRINGS[low]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def write_config_file(path: str | Path, config: EnvConfig, rules: RuleSet | None = None) -> None:
    """Write a flat key = value config file."""
    lines = ["# tabooforage environment config"]
    for f in dataclasses.fields(EnvConfig):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    if rules is not None:
        lines.append(f"condition = {rules.condition_tag}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_config_file(path: str | Path) -> tuple[EnvConfig, RuleSet | None]:
    """Parse a flat key = value config file.

    Unknown keys are rejected so that typos do not silently fall back to
    defaults.  Returns the config and, when a ``condition`` key is present,
    the matching RuleSet.
    """
    known = {f.name for f in dataclasses.fields(EnvConfig)}
    values: dict = {}
    condition = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key == "condition":
            condition = str(_parse_scalar(raw))
            continue
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_scalar(raw)
    config = dataclasses.replace(EnvConfig(), **values).validate()
    rules = make_rules(condition, config) if condition is not None else None
    return config, rules


def config_hash(config: EnvConfig, rules: RuleSet | None = None, extra: dict | None = None) -> str:
    """Stable hash identifying a configuration (stored in artifact headers)."""
    payload = {"env": dataclasses.asdict(config)}
    if rules is not None:
        payload["rules"] = {"condition": rules.condition_tag, "wrongful": sorted(rules.wrongful)}
    if extra:
        payload["extra"] = extra
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
