"""Simultaneous-move engine for the taboo-foraging Markov game.

One ForageEnv instance is one world: a seeded, single-threaded simulation of
N players foraging berries on a grid.  Eating a taboo berry marks the eater;
eating the poisonous type schedules a delayed, episode-permanent poisoning
that cuts berry reward from 4 to 1; a punishment beam lets players strip
reward from each other, at a profit only against marked targets.

Within one step the phases are fixed:

  1. beams resolve against pre-move positions,
  2. moves and rotations apply (random priority, losers stay put),
  3. berry eating resolves on cell entry,
  4. pending poisonings whose activation time equals the new timestep fire,
  5. consumed berry sites respawn stochastically,
  6. the timestep increments.

All events emitted by a step are stamped with the post-step timestep; an eat
stamped t schedules its poisoning at exactly t + poison_delay.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .config import ConfigError, EnvConfig, RuleSet

# Orientations, clockwise.  Movement deltas are absolute (north = up).
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
ORIENTATION_NAMES = ("N", "E", "S", "W")


class Action(IntEnum):
    MOVE_UP = 0
    MOVE_DOWN = 1
    MOVE_LEFT = 2
    MOVE_RIGHT = 3
    ROTATE_LEFT = 4
    ROTATE_RIGHT = 5
    FIRE_BEAM = 6
    NOOP = 7


NUM_ACTIONS = len(Action)

# Direction per move action id (MOVE_UP..MOVE_RIGHT).
_MOVE_DIR = (NORTH, SOUTH, WEST, EAST)

# Palette layout shared with the renderer: entity -> color index.
IDX_EMPTY = 0
IDX_OOB = 1
IDX_AGENT = 2
IDX_MARKED = 3
IDX_BERRY0 = 4  # berry type k renders as IDX_BERRY0 + k

OBS_WINDOW = 15  # egocentric window is OBS_WINDOW x OBS_WINDOW pixels
OBS_PAD = OBS_WINDOW // 2


class BerryEaten(NamedTuple):
    t: int
    player: int
    berry_type: int
    wrongful: bool


class PoisonActivated(NamedTuple):
    t: int
    player: int


class MarkApplied(NamedTuple):
    t: int
    player: int


class MarkRemoved(NamedTuple):
    t: int
    player: int


class PunishHit(NamedTuple):
    t: int
    punisher: int
    target: int
    target_was_marked: bool


class BeamMissed(NamedTuple):
    t: int
    player: int


Event = BerryEaten | PoisonActivated | MarkApplied | MarkRemoved | PunishHit | BeamMissed


def event_to_json_obj(ev: Event) -> dict:
    """Map an event to the log schema {t, type, player, payload}."""
    if isinstance(ev, BerryEaten):
        return {"t": ev.t, "type": "berry_eaten", "player": ev.player,
                "payload": {"berry_type": ev.berry_type, "wrongful": ev.wrongful}}
    if isinstance(ev, PoisonActivated):
        return {"t": ev.t, "type": "poison_activated", "player": ev.player, "payload": {}}
    if isinstance(ev, MarkApplied):
        return {"t": ev.t, "type": "mark_applied", "player": ev.player, "payload": {}}
    if isinstance(ev, MarkRemoved):
        return {"t": ev.t, "type": "mark_removed", "player": ev.player, "payload": {}}
    if isinstance(ev, PunishHit):
        return {"t": ev.t, "type": "punish_hit", "player": ev.punisher,
                "payload": {"target": ev.target, "target_was_marked": ev.target_was_marked}}
    if isinstance(ev, BeamMissed):
        return {"t": ev.t, "type": "beam_missed", "player": ev.player, "payload": {}}
    raise TypeError(f"not an event: {ev!r}")


def event_from_json_obj(obj: dict) -> Event:
    t, typ, player, payload = obj["t"], obj["type"], obj["player"], obj.get("payload", {})
    if typ == "berry_eaten":
        return BerryEaten(t, player, payload["berry_type"], payload["wrongful"])
    if typ == "poison_activated":
        return PoisonActivated(t, player)
    if typ == "mark_applied":
        return MarkApplied(t, player)
    if typ == "mark_removed":
        return MarkRemoved(t, player)
    if typ == "punish_hit":
        return PunishHit(t, player, payload["target"], payload["target_was_marked"])
    if typ == "beam_missed":
        return BeamMissed(t, player)
    raise ValueError(f"unknown event type {typ!r}")


def write_event_log(path, events: Iterable[Event]) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(event_to_json_obj(ev), separators=(",", ":")) + "\n")


def read_event_log(path) -> list[Event]:
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(event_from_json_obj(json.loads(line)))
    return events


@dataclass
class AgentState:
    """Snapshot of one player's state (cold-path view, see ForageEnv)."""

    position: tuple[int, int]  # (x, y)
    orientation: int
    marked: bool
    poisoned: bool
    pending_poison: list[int]
    episode_return: int


@dataclass
class WorldState:
    """Snapshot of the whole simulation (for inspection and comparison)."""

    timestep: int
    agents: list[AgentState]
    berry_cells: list[tuple[int, int]]
    berry_types: list[int]
    berry_present: list[bool]
    rng_state: object


class EpisodeFinished(RuntimeError):
    """Raised when step() is called on a finished episode."""


class ForageEnv:
    """The game engine.  One instance = one independent, seeded world.

    Instances share no mutable state and may be stepped in parallel freely.
    The hot state lives in flat Python lists indexed by player slot or cell
    (cell index = y * grid_width + x); numpy is used only for the painted
    color-index grid consumed by the renderer.
    """

    def __init__(self, config: EnvConfig, rules: RuleSet, seed: int | None = None):
        config.validate()
        rules.validate(config)
        self.config = config
        self.rules = rules
        self.n_players = config.players_per_episode
        W, H = config.grid_width, config.grid_height
        self._W, self._H = W, H
        n_cells = W * H
        # Neighbor tables: _nbr[d][cell] = destination cell or -1 (off-grid).
        nbr = [[-1] * n_cells for _ in range(4)]
        for y in range(H):
            for x in range(W):
                c = y * W + x
                if y > 0:
                    nbr[NORTH][c] = c - W
                if y < H - 1:
                    nbr[SOUTH][c] = c + W
                if x > 0:
                    nbr[WEST][c] = c - 1
                if x < W - 1:
                    nbr[EAST][c] = c + 1
        self._nbr = nbr
        self._wrongful = [t in rules.wrongful for t in range(config.num_berry_types)]
        self.reset(seed if seed is not None else config.rng_seed)

    # -- episode lifecycle ------------------------------------------------

    def reset(self, seed: int) -> None:
        """Start a fresh episode: uniform random distinct cells for berry
        sites and agents (agents never start on a present berry), berry types
        round-robin over the palette then shuffled."""
        cfg = self.config
        self._rng = random.Random(seed)
        n = self.n_players
        cells = self._rng.sample(range(self._W * self._H), cfg.berry_sites + n)
        self._site_cell = cells[: cfg.berry_sites]
        types = [i % cfg.num_berry_types for i in range(cfg.berry_sites)]
        self._rng.shuffle(types)
        self._site_type = types
        self._site_present = [True] * cfg.berry_sites
        self._absent: list[int] = []
        self._cell_site = [-1] * (self._W * self._H)
        for s, c in enumerate(self._site_cell):
            self._cell_site[c] = s

        self._pos = cells[cfg.berry_sites:]
        self._orient = [self._rng.randrange(4) for _ in range(n)]
        self._marked = [False] * n
        self._poisoned = [False] * n
        self._pending: list[list[int]] = [[] for _ in range(n)]
        self._returns = [0] * n
        self._occ = [-1] * (self._W * self._H)
        for i, c in enumerate(self._pos):
            self._occ[c] = i
        self.timestep = 0
        # Aggregate counters (cheap cross-checks for the metrics pipeline).
        self.marked_agent_steps = 0
        self.poisoned_agent_steps = 0
        self.respawn_draws = 0
        self.respawn_successes = 0

        # Painted color-index grid, padded so a window slice never bounds-checks.
        grid = np.full((self._H + 2 * OBS_PAD, self._W + 2 * OBS_PAD), IDX_OOB, dtype=np.uint8)
        grid[OBS_PAD: OBS_PAD + self._H, OBS_PAD: OBS_PAD + self._W] = IDX_EMPTY
        self._grid = grid
        for s, c in enumerate(self._site_cell):
            self._paint(c, IDX_BERRY0 + self._site_type[s])
        for i, c in enumerate(self._pos):
            self._paint(c, IDX_AGENT)

    def _paint(self, cell: int, idx: int) -> None:
        self._grid[cell // self._W + OBS_PAD, cell % self._W + OBS_PAD] = idx

    # -- queries -----------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.timestep >= self.config.episode_length

    def classify(self, berry_type: int) -> bool:
        """True iff eating this berry type is wrongful under the rule set."""
        if not (0 <= berry_type < self.config.num_berry_types):
            raise ValueError(f"berry type {berry_type} out of range")
        return self._wrongful[berry_type]

    def resolve_beam(self, shooter: int) -> Optional[int]:
        """First agent on the width-1 ray ahead of the shooter, up to
        beam_range cells, stopping at the grid border; None on a miss."""
        d = self._orient[shooter]
        nbr = self._nbr[d]
        occ = self._occ
        c = self._pos[shooter]
        for _ in range(self.config.beam_range):
            c = nbr[c]
            if c < 0:
                return None
            hit = occ[c]
            if hit >= 0:
                return hit
        return None

    def agent_state(self, i: int) -> AgentState:
        c = self._pos[i]
        return AgentState(
            position=(c % self._W, c // self._W),
            orientation=self._orient[i],
            marked=self._marked[i],
            poisoned=self._poisoned[i],
            pending_poison=list(self._pending[i]),
            episode_return=self._returns[i],
        )

    def snapshot(self) -> WorldState:
        return WorldState(
            timestep=self.timestep,
            agents=[self.agent_state(i) for i in range(self.n_players)],
            berry_cells=[(c % self._W, c // self._W) for c in self._site_cell],
            berry_types=list(self._site_type),
            berry_present=list(self._site_present),
            rng_state=self._rng.getstate(),
        )

    @property
    def episode_returns(self) -> list[int]:
        return list(self._returns)

    # -- stepping ----------------------------------------------------------

    def step(self, actions: Sequence[int]) -> tuple[list[int], list[Event]]:
        """Advance one simultaneous-move step.  Returns integer rewards per
        player and the events emitted, stamped with the new timestep."""
        if self.finished:
            raise EpisodeFinished(f"episode already ran {self.timestep} steps")
        if len(actions) != self.n_players:
            raise ValueError(f"need {self.n_players} actions, got {len(actions)}")
        cfg = self.config
        t_new = self.timestep + 1
        rewards = [0] * self.n_players
        events: list[Event] = []
        rng = self._rng
        occ = self._occ
        pos = self._pos
        marked = self._marked

        order = list(range(self.n_players))
        rng.shuffle(order)

        # 1. beams, against pre-move positions
        for i in order:
            if actions[i] == Action.FIRE_BEAM:
                target = self.resolve_beam(i)
                if target is None:
                    events.append(BeamMissed(t_new, i))
                    if cfg.charge_beam_on_miss:
                        rewards[i] -= cfg.beam_cost
                else:
                    rewards[i] -= cfg.beam_cost
                    rewards[target] -= cfg.punished_penalty
                    was_marked = marked[target]
                    events.append(PunishHit(t_new, i, target, was_marked))
                    if was_marked:
                        rewards[i] += cfg.punisher_bounty
                        marked[target] = False
                        self._paint(pos[target], IDX_AGENT)
                        events.append(MarkRemoved(t_new, target))

        # 2. moves and rotations, sequentially in random priority order; a
        # move succeeds only into a cell empty at its turn, so simultaneous
        # claims go to the priority winner and swap-throughs are impossible.
        moved = []
        for i in order:
            a = actions[i]
            if a == Action.ROTATE_LEFT:
                self._orient[i] = (self._orient[i] - 1) % 4
            elif a == Action.ROTATE_RIGHT:
                self._orient[i] = (self._orient[i] + 1) % 4
            elif a < 4:  # one of the four moves
                src = pos[i]
                dst = self._nbr[_MOVE_DIR[a]][src]
                if dst >= 0 and occ[dst] < 0:
                    occ[src] = -1
                    occ[dst] = i
                    pos[i] = dst
                    self._paint(src, IDX_EMPTY)
                    self._paint(dst, IDX_MARKED if marked[i] else IDX_AGENT)
                    moved.append(i)

        # 3. berry eating on entry
        for i in moved:
            s = self._cell_site[pos[i]]
            if s >= 0 and self._site_present[s]:
                self._site_present[s] = False
                self._absent.append(s)
                rewards[i] += cfg.poisoned_berry_reward if self._poisoned[i] else cfg.berry_reward
                btype = self._site_type[s]
                wrongful = self._wrongful[btype]
                events.append(BerryEaten(t_new, i, btype, wrongful))
                if wrongful and not marked[i]:
                    marked[i] = True
                    self._paint(pos[i], IDX_MARKED)
                    events.append(MarkApplied(t_new, i))
                if btype == cfg.poisonous_type and not self._poisoned[i]:
                    self._pending[i].append(t_new + cfg.poison_delay)

        # 4. poison activation (after eating: an eat in the activation step
        # still pays the healthy rate)
        for i in range(self.n_players):
            pend = self._pending[i]
            if pend and pend[0] == t_new:
                self._poisoned[i] = True
                pend.clear()  # later activations are no-ops once poisoned
                events.append(PoisonActivated(t_new, i))

        # 5. respawn of consumed sites (never under an agent)
        if self._absent:
            p = cfg.respawn_prob
            still_absent = []
            for s in self._absent:
                c = self._site_cell[s]
                if occ[c] < 0:
                    self.respawn_draws += 1
                    if rng.random() < p:
                        self.respawn_successes += 1
                        self._site_present[s] = True
                        self._paint(c, IDX_BERRY0 + self._site_type[s])
                        continue
                still_absent.append(s)
            self._absent = still_absent

        # 6. commit
        self.timestep = t_new
        for i in range(self.n_players):
            self._returns[i] += rewards[i]
        self.marked_agent_steps += sum(marked)
        self.poisoned_agent_steps += sum(self._poisoned)
        return rewards, events

    # -- scripted construction (tests, replays, debugging) ------------------

    @classmethod
    def from_layout(
        cls,
        config: EnvConfig,
        rules: RuleSet,
        agents: Sequence[tuple[tuple[int, int], int]],
        berries: Sequence[tuple[tuple[int, int], int, bool]],
        seed: int = 0,
    ) -> "ForageEnv":
        """Build a world with an explicit layout.

        ``agents`` is a list of ((x, y), orientation); ``berries`` a list of
        ((x, y), berry_type, present).  Cells must be distinct and agents may
        not stand on a present berry.
        """
        import dataclasses

        if len(agents) != config.players_per_episode:
            raise ConfigError(f"layout has {len(agents)} agents, config expects "
                              f"{config.players_per_episode}")
        cfg = dataclasses.replace(config, berry_sites=max(1, len(berries))).validate()
        env = cls(cfg, rules, seed)
        W, H = cfg.grid_width, cfg.grid_height
        env._site_cell, env._site_type, env._site_present = [], [], []
        env._absent = []
        env._cell_site = [-1] * (W * H)
        env._occ = [-1] * (W * H)
        env._grid[OBS_PAD: OBS_PAD + H, OBS_PAD: OBS_PAD + W] = IDX_EMPTY
        used = set()
        for s, ((x, y), btype, present) in enumerate(berries):
            c = y * W + x
            if c in used:
                raise ConfigError(f"duplicate layout cell {(x, y)}")
            used.add(c)
            env._site_cell.append(c)
            env._site_type.append(btype)
            env._site_present.append(present)
            env._cell_site[c] = s
            if present:
                env._paint(c, IDX_BERRY0 + btype)
            else:
                env._absent.append(s)
        env._pos, env._orient = [], []
        for i, ((x, y), orient) in enumerate(agents):
            c = y * W + x
            if c in used:
                raise ConfigError(f"duplicate layout cell {(x, y)}")
            s = env._cell_site[c]
            if s >= 0 and env._site_present[s]:
                raise ConfigError(f"agent {i} placed on a present berry at {(x, y)}")
            used.add(c)
            env._pos.append(c)
            env._occ[c] = i
            env._orient.append(orient)
            env._paint(c, IDX_AGENT)
        return env


def random_action_rollout(env: ForageEnv, steps: int, seed: int = 0):
    """Drive an env with uniform random actions; returns (rewards, events)
    streams.  Used by benchmarks and accounting checks."""
    rng = random.Random(seed)
    n = env.n_players
    all_rewards = []
    all_events = []
    for _ in range(steps):
        if env.finished:
            break
        actions = [rng.randrange(NUM_ACTIONS) for _ in range(n)]
        rewards, events = env.step(actions)
        all_rewards.append(rewards)
        all_events.append(events)
    return all_rewards, all_events
