"""Players and their declarative specs.

An agent token on the command line reads ``kind[:mode:amount][@snapshot]``,
e.g. ``mcts:playouts:100000`` or ``qplayer@runs/q/rep0``.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .games import ConfigurationError, GameState, legal_moves
from .learning import (
    EpsilonSchedule,
    LearningParams,
    MatchRecord,
    QTable,
    q_backward_update,
    qmplayer_select,
    qplayer_select,
)
from .search import SearchBudget, mcs_select, mcts_select

DEFAULT_QM_BUDGET = SearchBudget.playouts(200)
DEFAULT_MCS_BUDGET = SearchBudget.playouts(10000)
DEFAULT_MCTS_BUDGET = SearchBudget.playouts(100000)


class AgentKind(str, enum.Enum):
    RANDOM = "random"
    QPLAYER = "qplayer"
    QMPLAYER = "qmplayer"
    MCS = "mcs"
    MCTS = "mcts"


LABELS = {
    AgentKind.RANDOM: "Random",
    AgentKind.QPLAYER: "QPlayer",
    AgentKind.QMPLAYER: "QMPlayer",
    AgentKind.MCS: "MCS",
    AgentKind.MCTS: "MCTS",
}

_Q_KINDS = (AgentKind.QPLAYER, AgentKind.QMPLAYER)
_BUDGET_KINDS = (AgentKind.QMPLAYER, AgentKind.MCS, AgentKind.MCTS)


class Agent:
    learns = False

    def __init__(self, name: str):
        self.name = name

    def select(self, state: GameState, rng, m: int = 0, learning: bool = False) -> int:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class RandomAgent(Agent):
    def select(self, state, rng, m=0, learning=False):
        return rng.choice(legal_moves(state))


class MCSAgent(Agent):
    def __init__(self, name, budget: SearchBudget):
        super().__init__(name)
        self.budget = budget

    def select(self, state, rng, m=0, learning=False):
        return mcs_select(state, self.budget, rng)


class MCTSAgent(Agent):
    def __init__(self, name, budget: SearchBudget):
        super().__init__(name)
        self.budget = budget

    def select(self, state, rng, m=0, learning=False):
        return mcts_select(state, self.budget, rng, state.to_move)


class QAgent(Agent):
    """QPlayer, or QMPlayer when a fallback search budget is given.

    Holds one table per role. Outside the learning phase exploration is off.
    """

    learns = True

    def __init__(self, name, params: LearningParams, schedule: EpsilonSchedule,
                 budget: Optional[SearchBudget] = None, tables=None):
        super().__init__(name)
        self.params = params
        self.schedule = schedule
        self.budget = budget
        self.tables = list(tables) if tables is not None else [QTable(0), QTable(1)]
        self.matches_learned = 0

    def select(self, state, rng, m=0, learning=False):
        eps = None if learning else 0.0
        if self.budget is None:
            return qplayer_select(self.tables, state, self.schedule, m, rng, eps)
        return qmplayer_select(self.tables, state, self.schedule, m, self.budget, rng, eps)

    def learn(self, record: MatchRecord) -> None:
        q_backward_update(self.tables[record.role], record, self.params)


@dataclass(frozen=True)
class AgentSpec:
    kind: AgentKind
    params: Optional[LearningParams] = None
    schedule: Optional[EpsilonSchedule] = None
    budget: Optional[SearchBudget] = None
    snapshot: Optional[str] = None
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        try:
            kind = AgentKind(self.kind)
        except ValueError:
            raise ConfigurationError(f"unknown agent kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if kind in _Q_KINDS:
            if self.params is None:
                object.__setattr__(self, "params", LearningParams())
            if self.schedule is None:
                object.__setattr__(self, "schedule", EpsilonSchedule())
        elif self.params is not None or self.schedule is not None or self.snapshot is not None:
            raise ConfigurationError(f"{kind.value} takes no learning parameters")
        if kind in _BUDGET_KINDS:
            if self.budget is None:
                default = {AgentKind.QMPLAYER: DEFAULT_QM_BUDGET, AgentKind.MCS: DEFAULT_MCS_BUDGET,
                           AgentKind.MCTS: DEFAULT_MCTS_BUDGET}[kind]
                object.__setattr__(self, "budget", default)
        elif self.budget is not None:
            raise ConfigurationError(f"{kind.value} takes no search budget")

    @property
    def label(self) -> str:
        return self.name or LABELS[self.kind]

    @property
    def learns(self) -> bool:
        return self.kind in _Q_KINDS

    @property
    def token(self) -> str:
        tok = self.kind.value
        if self.budget is not None:
            tok += ":" + self.budget.token
        if self.snapshot:
            tok += "@" + self.snapshot
        return tok

    @classmethod
    def parse(cls, token: str, params: Optional[LearningParams] = None,
              schedule: Optional[EpsilonSchedule] = None) -> "AgentSpec":
        head, _, snapshot = token.strip().partition("@")
        kind, _, budget = head.partition(":")
        try:
            kind = AgentKind(kind.lower())
        except ValueError:
            raise ConfigurationError(f"unknown agent {token!r}") from None
        q = kind in _Q_KINDS
        return cls(
            kind,
            params=params if q else None,
            schedule=schedule if q else None,
            budget=SearchBudget.parse(budget) if budget else None,
            snapshot=snapshot or None,
        )

    def with_learning_matches(self, l: int) -> "AgentSpec":
        if self.schedule is None:
            return self
        return replace(self, schedule=replace(self.schedule, l=l))

    def build(self, frozen: bool = False) -> Agent:
        """Instantiate the player. ``frozen`` learners must load a snapshot."""
        label = self.label
        if self.kind is AgentKind.RANDOM:
            return RandomAgent(label)
        if self.kind is AgentKind.MCS:
            return MCSAgent(label, self.budget)
        if self.kind is AgentKind.MCTS:
            return MCTSAgent(label, self.budget)
        tables = None
        if self.snapshot is not None:
            tables = load_agent_tables(self.snapshot)
        elif frozen:
            raise ConfigurationError(f"{label} needs a Q-table snapshot (use {self.kind.value}@DIR)")
        budget = self.budget if self.kind is AgentKind.QMPLAYER else None
        return QAgent(label, self.params, self.schedule, budget, tables)


def snapshot_paths(directory: str) -> list[str]:
    return [os.path.join(directory, f"qtable_role{r}.tsv") for r in (0, 1)]


def load_agent_tables(directory: str) -> list[QTable]:
    from .reporting import load_qtable

    paths = snapshot_paths(directory)
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise ConfigurationError(f"missing Q-table snapshot: {', '.join(missing)}")
    return [load_qtable(p) for p in paths]
