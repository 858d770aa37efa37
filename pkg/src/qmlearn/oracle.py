"""Exhaustive ground truth for small boards: reachable-state enumeration and
memoised minimax.
"""
from __future__ import annotations

import sys

from .games import GameSpec, GameState, apply, goals_for, initial_state, legal_moves

DEFAULT_LIMIT = 10**7


class OracleLimitError(RuntimeError):
    """The game has more reachable states than the oracle is allowed to visit."""


def enumerate_states(spec: GameSpec, limit: int = DEFAULT_LIMIT) -> int:
    """Number of distinct positions reachable from the empty board, terminal
    ones included."""
    start = initial_state(spec)
    seen = {(start.b0, start.b1)}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            for a in legal_moves(s):
                c = apply(s, a)
                k = (c.b0, c.b1)
                if k not in seen:
                    seen.add(k)
                    if len(seen) > limit:
                        raise OracleLimitError(f"{spec.token} has more than {limit} reachable states")
                    nxt.append(c)
        frontier = nxt
    return len(seen)


class Minimax:
    """Perfect-play values; ``value(s)`` is role 0's goal under optimal play."""

    def __init__(self, spec: GameSpec, limit: int = DEFAULT_LIMIT):
        self.spec = spec
        self.limit = limit
        self.memo: dict[tuple[int, int], int] = {}
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * spec.cells + 100))

    def value(self, state: GameState) -> int:
        if state.status is not None:
            return goals_for(state.status)[0]
        k = (state.b0, state.b1)
        v = self.memo.get(k)
        if v is None:
            vals = [self.value(apply(state, a)) for a in legal_moves(state)]
            v = max(vals) if state.to_move == 0 else min(vals)
            if len(self.memo) >= self.limit:
                raise OracleLimitError(f"{self.spec.token} exceeds {self.limit} states")
            self.memo[k] = v
        return v

    def move_values(self, state: GameState) -> dict[int, int]:
        """Goal of the role to move after each legal move, under perfect play."""
        me = state.to_move
        out = {}
        for a in legal_moves(state):
            v0 = self.value(apply(state, a))
            out[a] = v0 if me == 0 else 100 - v0
        return out

    def optimal_moves(self, state: GameState) -> list[int]:
        mv = self.move_values(state)
        best = max(mv.values())
        return [a for a, v in mv.items() if v == best]

    def losing_moves(self, state: GameState) -> list[int]:
        """Moves that lose under perfect play although a non-losing move exists."""
        mv = self.move_values(state)
        if max(mv.values()) == 0:
            return []
        return [a for a, v in mv.items() if v == 0]


def game_value(spec: GameSpec, limit: int = DEFAULT_LIMIT) -> tuple[int, int]:
    v = Minimax(spec, limit).value(initial_state(spec))
    return v, 100 - v


def outcome_label(v0: int) -> str:
    return {100: "first player wins", 0: "second player wins", 50: "draw"}[v0]
