"""Tabular Q-learning agent: action space, sparse Q-table, update rule.

Actions pair an execution tier (vehicle-local, fog, cloud) with a resource
bundle size scaling the allocation. The Q-table is a sparse dict; unwritten
entries read as the 0.0 initialization, and argmax ties resolve to the
lowest action ordinal so greedy behavior is deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import ValidationError


class Tier(IntEnum):
    LOCAL = 0
    FOG = 1
    CLOUD = 2


class Bundle(IntEnum):
    SMALL = 0
    MEDIUM = 1
    LARGE = 2


@dataclass(frozen=True, slots=True)
class Action:
    tier: Tier
    bundle: Bundle

    @property
    def ordinal(self) -> int:
        return int(self.tier) * 3 + int(self.bundle)


ACTIONS: tuple[Action, ...] = tuple(
    Action(tier, bundle) for tier in Tier for bundle in Bundle
)
NUM_ACTIONS = len(ACTIONS)


def action_from_ordinal(ordinal: int) -> Action:
    if not (0 <= ordinal < NUM_ACTIONS):
        raise ValidationError(f"action ordinal {ordinal!r} outside [0, {NUM_ACTIONS})")
    return ACTIONS[ordinal]


@dataclass
class HyperParams:
    """Learning-rate, discount and exploration schedule settings.

    alpha_schedule selects a fixed learning rate or the harmonic
    1/(1 + visits(s, a)) decay used by the convergence oracle.
    """

    alpha: float = 0.1
    gamma: float = 0.9
    epsilon_start: float = 0.1
    epsilon_end: float = 0.01
    episodes: int = 100
    max_time_steps: int = 300
    alpha_schedule: str = "fixed"

    def validate(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValidationError(f"alpha={self.alpha!r} outside (0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise ValidationError(f"gamma={self.gamma!r} outside [0, 1)")
        for name, eps in (("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)):
            if not (0.0 <= eps <= 1.0):
                raise ValidationError(f"{name}={eps!r} outside [0, 1]")
        if self.epsilon_end > self.epsilon_start:
            raise ValidationError(
                f"epsilon_end={self.epsilon_end!r} exceeds epsilon_start={self.epsilon_start!r}"
            )
        if self.episodes < 1:
            raise ValidationError(f"episodes={self.episodes!r} must be >= 1")
        if self.max_time_steps < 1:
            raise ValidationError(f"max_time_steps={self.max_time_steps!r} must be >= 1")
        if self.alpha_schedule not in ("fixed", "harmonic"):
            raise ValidationError(
                f"alpha_schedule must be 'fixed' or 'harmonic', got {self.alpha_schedule!r}"
            )


class QTable:
    """Sparse action-value table over (state ordinal, action ordinal)."""

    __slots__ = ("num_states", "num_actions", "values")

    def __init__(self, num_states: int, num_actions: int):
        if num_states < 1 or num_actions < 1:
            raise ValidationError(
                f"table dimensions must be positive, got {num_states!r} x {num_actions!r}"
            )
        self.num_states = num_states
        self.num_actions = num_actions
        self.values: dict[tuple[int, int], float] = {}

    def get(self, state: int, action: int) -> float:
        return self.values.get((state, action), 0.0)

    def set(self, state: int, action: int, value: float) -> None:
        if not (0 <= state < self.num_states):
            raise ValidationError(f"state ordinal {state!r} outside [0, {self.num_states})")
        if not (0 <= action < self.num_actions):
            raise ValidationError(f"action ordinal {action!r} outside [0, {self.num_actions})")
        if not math.isfinite(value):
            raise ValidationError(f"q value must be finite, got {value!r}")
        self.values[(state, action)] = value

    def row(self, state: int) -> list[float]:
        get = self.values.get
        return [get((state, a), 0.0) for a in range(self.num_actions)]

    def argmax_action(self, state: int) -> int:
        """Lowest-ordinal action attaining the row maximum."""
        get = self.values.get
        best_a = 0
        best_v = get((state, 0), 0.0)
        for a in range(1, self.num_actions):
            v = get((state, a), 0.0)
            if v > best_v:
                best_v = v
                best_a = a
        return best_a

    def max_value(self, state: int) -> float:
        get = self.values.get
        best = get((state, 0), 0.0)
        for a in range(1, self.num_actions):
            v = get((state, a), 0.0)
            if v > best:
                best = v
        return best

    def __len__(self) -> int:
        return len(self.values)

    def save(self, path: str | Path) -> None:
        """Write entries as tab-separated (state, action, value) records."""
        path = Path(path)
        lines = [f"# vfcsim qtable v1 num_states={self.num_states} num_actions={self.num_actions}\n"]
        for (s, a) in sorted(self.values):
            lines.append(f"{s}\t{a}\t{self.values[(s, a)]!r}\n")
        path.write_text("".join(lines))

    @classmethod
    def load(cls, path: str | Path) -> "QTable":
        path = Path(path)
        text = path.read_text()
        table: QTable | None = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = dict(
                    token.split("=", 1) for token in line.lstrip("# ").split() if "=" in token
                )
                try:
                    table = cls(int(parts["num_states"]), int(parts["num_actions"]))
                except (KeyError, ValueError) as exc:
                    raise ValidationError(f"{path}:{lineno}: bad q-table header") from exc
                continue
            if table is None:
                raise ValidationError(f"{path}:{lineno}: q-table data precedes header")
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated fields")
            table.set(int(fields[0]), int(fields[1]), float(fields[2]))
        if table is None:
            raise ValidationError(f"{path}: missing q-table header")
        return table


def init_q_values(num_states: int, num_actions: int) -> QTable:
    """Fresh all-zero table (zeros are implicit in the sparse store)."""
    return QTable(num_states, num_actions)


def select_action(q: QTable, state: int, epsilon: float, rng: random.Random) -> Action:
    """Epsilon-greedy action selection."""
    if not (0.0 <= epsilon <= 1.0):
        raise ValidationError(f"epsilon={epsilon!r} outside [0, 1]")
    if not (0 <= state < q.num_states):
        raise ValidationError(f"state ordinal {state!r} outside [0, {q.num_states})")
    if epsilon > 0.0 and rng.random() < epsilon:
        return ACTIONS[rng.randrange(q.num_actions)]
    return ACTIONS[q.argmax_action(state)]


def update_q_value(
    q: QTable,
    state: int,
    action: int,
    next_state: int,
    reward: float,
    params: HyperParams,
    alpha: float | None = None,
) -> float:
    """One Bellman backup; returns the updated entry.

    Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)). The optional
    alpha argument overrides params.alpha (used by decaying schedules).
    """
    if not math.isfinite(reward):
        raise ValidationError(f"reward must be finite, got {reward!r}")
    a = params.alpha if alpha is None else alpha
    old = q.get(state, action)
    target = reward + params.gamma * q.max_value(next_state)
    new = old + a * (target - old)
    q.set(state, action, new)
    return new


def epsilon_at(episode: int, params: HyperParams) -> float:
    """Linear decay from epsilon_start (episode 0) to epsilon_end (last episode)."""
    if not (0 <= episode < params.episodes):
        raise ValidationError(f"episode {episode!r} outside [0, {params.episodes})")
    if params.episodes == 1:
        return params.epsilon_start
    frac = episode / (params.episodes - 1)
    return params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac


def greedy_policy(q: QTable) -> dict[int, Action]:
    """Greedy action for every state with at least one written entry.

    States absent from the map fall back to action ordinal 0, matching
    argmax over an all-zero row.
    """
    states = {s for (s, _a) in q.values}
    return {s: ACTIONS[q.argmax_action(s)] for s in sorted(states)}
