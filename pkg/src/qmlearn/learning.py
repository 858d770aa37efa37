"""Tabular Q-learning: per-role tables, end-of-match backward updates, the
cosine exploration schedule, and the QPlayer / QMPlayer move selectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Optional, Protocol

from .games import ConfigurationError, GameState, legal_moves
from .search import SearchBudget, mcs_select


@dataclass(frozen=True)
class LearningParams:
    alpha: float = 0.1
    gamma: float = 0.9

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ConfigurationError(f"alpha and gamma must lie in [0, 1]: {self}")


@dataclass(frozen=True)
class EpsilonSchedule:
    """eps(m) = a*cos(m*pi / 2l) + b for m <= l, and 0 afterwards.

    A fixed exploration rate e over l matches is ``EpsilonSchedule(0, e, l)``.
    """

    a: float = 0.5
    b: float = 0.0
    l: int = 50000

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.a + self.b > 1:
            raise ConfigurationError(f"need a, b >= 0 and a + b <= 1: {self}")
        if self.l < 0:
            raise ConfigurationError("total learning matches must be non-negative")

    @classmethod
    def fixed(cls, eps: float, l: int) -> "EpsilonSchedule":
        return cls(0.0, eps, l)

    def __call__(self, m: int) -> float:
        return epsilon(self, m)


def epsilon(schedule: EpsilonSchedule, m: int) -> float:
    if m > schedule.l:
        return 0.0
    if schedule.a == 0.0 or schedule.l == 0:
        return schedule.a + schedule.b
    return schedule.a * math.cos(m * math.pi / (2 * schedule.l)) + schedule.b


@dataclass
class QTable:
    """Learned values for one role, stored as ``{state_key: {move: value}}``.

    Missing entries mean "never learned"; they read as 0 inside updates.
    """

    role: int = 0
    rows: dict[str, dict[int, float]] = field(default_factory=dict)

    def get(self, key: str, move: int, default: float = 0.0) -> float:
        row = self.rows.get(key)
        if row is None:
            return default
        return row.get(move, default)

    def set(self, key: str, move: int, value: float) -> None:
        row = self.rows.get(key)
        if row is None:
            row = self.rows[key] = {}
        row[move] = value

    def max_value(self, key: str) -> float:
        row = self.rows.get(key)
        return max(row.values()) if row else 0.0

    def entries(self) -> Iterator[tuple[str, int, float]]:
        """All entries sorted by state key, then move."""
        for key in sorted(self.rows):
            row = self.rows[key]
            for move in sorted(row):
                yield key, move, row[move]

    def copy(self) -> "QTable":
        return QTable(self.role, {k: dict(r) for k, r in self.rows.items()})

    def __len__(self):
        return sum(len(r) for r in self.rows.values())


@dataclass
class MatchRecord:
    """One role's own decisions during a match, plus how the match ended.

    ``steps`` holds ``(state_key, move, next_state_key)`` in play order, where
    the next state is the one this role faced on its following turn, or the
    terminal state.
    """

    role: int
    steps: list[tuple[str, int, str]] = field(default_factory=list)
    terminal_key: Optional[str] = None
    terminal_goal: Optional[int] = None


def reward(next_key: str, record: MatchRecord) -> float:
    """Zero unless the successor is the terminal state; then the role's goal."""
    if next_key == record.terminal_key:
        return float(record.terminal_goal)
    return 0.0


def q_backward_update(table: QTable, record: MatchRecord, params: LearningParams) -> QTable:
    """Apply the Q-learning rule to every step of ``record``, last step first.

    The table is updated in place and returned.
    """
    if record.terminal_key is None or record.terminal_goal is None:
        raise ValueError("match record has no terminal outcome")
    alpha, gamma = params.alpha, params.gamma
    rows = table.rows
    for key, move, next_key in reversed(record.steps):
        if next_key == record.terminal_key:
            r = float(record.terminal_goal)
            next_max = 0.0
        else:
            r = 0.0
            nrow = rows.get(next_key)
            next_max = max(nrow.values()) if nrow else 0.0
        row = rows.get(key)
        if row is None:
            row = rows[key] = {}
        row[move] = (1.0 - alpha) * row.get(move, 0.0) + alpha * (r + gamma * next_max)
    return table


def q_lookup_max(table: QTable, state_key: str, moves: Iterable[int]) -> Optional[tuple[int, float]]:
    """Best stored (move, value) with value > 0, lowest move on ties; else None."""
    row = table.rows.get(state_key)
    if not row:
        return None
    best = None
    best_v = 0.0
    for move in sorted(moves):
        v = row.get(move)
        if v is not None and v > best_v:
            best, best_v = move, v
    return None if best is None else (best, best_v)


def qplayer_select(tables, state: GameState, schedule: EpsilonSchedule, m: int, rng,
                   eps: Optional[float] = None) -> int:
    """Epsilon-greedy choice from the mover's table, random when unlearned.

    ``eps`` overrides the schedule (the exploitation phase passes 0).
    """
    return _select(tables, state, schedule, m, rng, eps, None)


def qmplayer_select(tables, state: GameState, schedule: EpsilonSchedule, m: int,
                    budget: SearchBudget, rng, eps: Optional[float] = None) -> int:
    """As :func:`qplayer_select`, but unlearned states fall back to flat MCS."""
    return _select(tables, state, schedule, m, rng, eps, budget)


def _select(tables, state, schedule, m, rng, eps, budget):
    moves = legal_moves(state)
    if not moves:
        raise ConfigurationError(f"no legal moves in {state.key}")
    if eps is None:
        eps = epsilon(schedule, m)
    # one draw per decision, made even when eps is 0, so the stream is shared
    # by both selectors
    if rng.random() < eps:
        return rng.choice(moves)
    found = q_lookup_max(tables[state.to_move], state.key, moves)
    if found is not None:
        return found[0]
    if budget is None:
        return rng.choice(moves)
    return mcs_select(state, budget, rng)


# -- single-player games -------------------------------------------------------

class SinglePlayerEnv(Protocol):
    def initial(self) -> Hashable: ...
    def actions(self, s) -> list[int]: ...
    def step(self, s, a: int): ...
    def is_terminal(self, s) -> bool: ...
    def goal(self, s) -> float: ...
    def key(self, s) -> str: ...


@dataclass(frozen=True)
class ChainPuzzle:
    """Deterministic puzzle: ``depth`` choices in a row, each among ``width`` actions.

    States are tuples of actions taken so far. The goal of a finished path is
    looked up in ``goals`` (keyed by the action tuple), 0 if absent.
    """

    depth: int
    width: int
    goals: dict = field(default_factory=dict, hash=False)

    def initial(self):
        return ()

    def actions(self, s):
        return [] if len(s) >= self.depth else list(range(self.width))

    def step(self, s, a):
        return s + (a,)

    def is_terminal(self, s):
        return len(s) >= self.depth

    def goal(self, s):
        return float(self.goals.get(s, 0))

    def key(self, s):
        return "chain|" + ",".join(map(str, s))


class FixedOpponentEnv:
    """A two-player game seen by one role, with the other role's replies
    produced by ``opponent(state, rng)``.
    """

    def __init__(self, spec, role: int, opponent: Callable, rng):
        from .games import apply, goal, initial_state, is_terminal
        self._apply, self._goal, self._is_terminal = apply, goal, is_terminal
        self.start = initial_state(spec)
        self.role = role
        self.opponent = opponent
        self.rng = rng

    def _advance(self, s):
        while not self._is_terminal(s) and s.to_move != self.role:
            s = self._apply(s, self.opponent(s, self.rng))
        return s

    def initial(self):
        return self._advance(self.start)

    def actions(self, s):
        return legal_moves(s)

    def step(self, s, a):
        return self._advance(self._apply(s, a))

    def is_terminal(self, s):
        return self._is_terminal(s)

    def goal(self, s):
        return float(self._goal(s, self.role))

    def key(self, s):
        return s.key


def single_player_select(table: QTable, env, s, rng) -> int:
    """Greedy move from ``table``; random when no stored value beats 0."""
    moves = env.actions(s)
    found = q_lookup_max(table, env.key(s), moves)
    return found[0] if found is not None else rng.choice(moves)


def single_player_qlearning(env, params: LearningParams, schedule: EpsilonSchedule,
                            matches: int, rng, table: Optional[QTable] = None) -> QTable:
    """Train one table on a single-decision-maker environment.

    Each match is played epsilon-greedily with the schedule's rate and the
    table is updated backwards once the match ends.
    """
    table = QTable(0) if table is None else table
    for m in range(matches):
        s = env.initial()
        record = MatchRecord(0)
        while not env.is_terminal(s):
            if rng.random() < epsilon(schedule, m):
                a = rng.choice(env.actions(s))
            else:
                a = single_player_select(table, env, s, rng)
            nxt = env.step(s, a)
            record.steps.append((env.key(s), a, env.key(nxt)))
            s = nxt
        record.terminal_key = env.key(s)
        record.terminal_goal = env.goal(s)
        if record.steps:
            q_backward_update(table, record, params)
    return table
