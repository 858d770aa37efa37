"""Flat Monte Carlo Search and UCT-minmax Monte Carlo Tree Search.

Both searches run under a :class:`SearchBudget`. Playout budgets are
deterministic given the random stream; wall-clock budgets mirror a
per-decision time limit and are not reproducible.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Optional

from .games import (
    DRAW,
    ConfigurationError,
    GameState,
    apply,
    goals_for,
    legal_moves,
)

# goals run 0..100; tree statistics keep them raw, UCT scores use unit scale
GOAL_SCALE = 100.0


class BudgetMode(str, enum.Enum):
    PLAYOUTS = "playouts"
    MILLIS = "ms"


@dataclass(frozen=True)
class SearchBudget:
    mode: BudgetMode = BudgetMode.PLAYOUTS
    amount: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "mode", BudgetMode(self.mode))
        if self.amount < 0:
            raise ConfigurationError("search budget must be non-negative")

    @classmethod
    def playouts(cls, n: int) -> "SearchBudget":
        return cls(BudgetMode.PLAYOUTS, n)

    @classmethod
    def millis(cls, ms: int) -> "SearchBudget":
        return cls(BudgetMode.MILLIS, ms)

    @classmethod
    def parse(cls, token: str) -> "SearchBudget":
        """Parse ``playouts:1000`` or ``ms:50``."""
        mode, _, amount = token.strip().lower().partition(":")
        try:
            return cls(BudgetMode(mode), int(amount))
        except ValueError:
            raise ConfigurationError(f"bad budget {token!r}") from None

    @property
    def token(self) -> str:
        return f"{self.mode.value}:{self.amount}"

    def __str__(self):
        return self.token


class _Meter:
    """Counts budget units; ``spent()`` is True once the budget is used up."""

    __slots__ = ("budget", "used", "deadline")

    def __init__(self, budget: SearchBudget):
        self.budget = budget
        self.used = 0
        self.deadline = None
        if budget.mode is BudgetMode.MILLIS:
            self.deadline = time.perf_counter() + budget.amount / 1000.0

    def spent(self) -> bool:
        if self.deadline is None:
            return self.used >= self.budget.amount
        return time.perf_counter() > self.deadline


@dataclass(frozen=True)
class PlayoutResult:
    goals: tuple[int, int]

    def __getitem__(self, role: int) -> int:
        return self.goals[role]


def playout_status(state: GameState, rng) -> int:
    """Winner (0 or 1) or DRAW after uniformly random play from ``state``."""
    if state.status is not None:
        return state.status
    return state.rules.playout(state.b0, state.b1, state.to_move, rng.random)


def random_playout(state: GameState, rng) -> PlayoutResult:
    return PlayoutResult(goals_for(playout_status(state, rng)))


def mcs_select(state: GameState, budget: SearchBudget, rng, stats: Optional[dict] = None) -> int:
    """Flat Monte Carlo move choice for the role to move.

    Probes the legal moves round-robin, one random playout each, and returns
    the move with the best mean goal. Moves never probed are not candidates.
    If ``stats`` is given it receives per-move ``score``/``visits`` lists.
    """
    moves = legal_moves(state)
    if not moves:
        raise ConfigurationError(f"no legal moves in {state.key}")
    if len(moves) == 1:
        return moves[0]
    n = len(moves)
    me = state.to_move
    children = [apply(state, a) for a in moves]
    score = [0] * n
    visits = [0] * n
    meter = _Meter(budget)
    rand = rng.random
    i = 0
    while not meter.spent():
        child = children[i]
        status = child.status
        if status is None:
            status = child.rules.playout(child.b0, child.b1, child.to_move, rand)
        if status == me:
            score[i] += 100
        elif status == DRAW:
            score[i] += 50
        visits[i] += 1
        meter.used += 1
        i += 1
        if i == n:
            i = 0
    if stats is not None:
        stats.update(moves=moves, score=score, visits=visits)
    best, best_mean = 0, 0.0
    for j in range(n):
        if visits[j]:
            mean = score[j] / visits[j]
            if mean > best_mean:
                best, best_mean = j, mean
    return moves[best]


class TreeNode:
    __slots__ = ("state", "move", "children", "visit_count", "total_value", "parent")

    def __init__(self, state: GameState, move: Optional[int] = None,
                 parent: Optional["TreeNode"] = None):
        self.state = state
        self.move = move
        self.parent = parent
        self.children: list[TreeNode] = []
        self.visit_count = 0
        self.total_value = 0.0

    @property
    def mean(self) -> float:
        return self.total_value / self.visit_count

    def expand(self) -> None:
        st = self.state
        self.children = [TreeNode(apply(st, a), a, self) for a in legal_moves(st)]

    def __repr__(self):
        return f"TreeNode(move={self.move}, n={self.visit_count}, v={self.total_value})"


def uct_minmax(node: TreeNode, my_role: int) -> TreeNode:
    """Child maximising (my turn) or minimising (opponent turn) the UCT score.

    Unvisited children come first, in move order. Means are taken on the
    unit goal scale so the exploration term is not swamped by 0..100 goals,
    and on opponent turns the exploration term is subtracted, which is the
    opponent's own UCT score under a zero-sum outcome.
    """
    children = node.children
    for child in children:
        if child.visit_count == 0:
            return child
    log_n = math.log(node.visit_count + 1)
    sqrt = math.sqrt
    best = children[0]
    if node.state.to_move == my_role:
        best_u = -math.inf
        for child in children:
            n = child.visit_count
            u = child.total_value / (n * GOAL_SCALE) + sqrt(log_n / n)
            if u > best_u:
                best, best_u = child, u
    else:
        best_u = math.inf
        for child in children:
            n = child.visit_count
            u = child.total_value / (n * GOAL_SCALE) - sqrt(log_n / n)
            if u < best_u:
                best, best_u = child, u
    return best


def mcts_search(state: GameState, budget: SearchBudget, rng, my_role: Optional[int] = None) -> TreeNode:
    """Build a fresh UCT-minmax tree rooted at ``state`` and return its root."""
    if my_role is None:
        my_role = state.to_move
    root = TreeNode(state)
    meter = _Meter(budget)
    rand = rng.random
    while not meter.spent():
        node = root
        path = [root]
        while node.children:
            node = uct_minmax(node, my_role)
            path.append(node)
        if node.state.status is None:
            node.expand()
            node = uct_minmax(node, my_role)
            path.append(node)
        st = node.state
        status = st.status
        if status is None:
            status = st.rules.playout(st.b0, st.b1, st.to_move, rand)
        bonus = 100 if status == my_role else 50 if status == DRAW else 0
        for n in path:
            n.visit_count += 1
            n.total_value += bonus
        meter.used += 1
    return root


def best_child(root: TreeNode) -> Optional[TreeNode]:
    """Visited root child with the highest mean value; ties keep the lowest move."""
    best, best_mean = None, -1.0
    for child in root.children:
        if child.visit_count:
            mean = child.total_value / child.visit_count
            if mean > best_mean:
                best, best_mean = child, mean
    return best


def mcts_select(state: GameState, budget: SearchBudget, rng, my_role: Optional[int] = None) -> int:
    moves = legal_moves(state)
    if not moves:
        raise ConfigurationError(f"no legal moves in {state.key}")
    if len(moves) == 1:
        return moves[0]
    child = best_child(mcts_search(state, budget, rng, my_role))
    return moves[0] if child is None else child.move
