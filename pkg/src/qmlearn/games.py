"""Rule engines for Tic-Tac-Toe, Connect Four and Hex.

All three games share one interface built on a pair of bitboards (one per
role). Cells are indexed row-major, ``row * width + col``, with row 0 at the
top. In Connect Four stones fall towards the highest row index.

Roles are plain ints: 0 moves first, 1 moves second.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Optional, Sequence

ROLES = (0, 1)
DRAW = 2

WIN, TIE, LOSS = 100, 50, 0

_CELL_CHARS = ".xo"


class ConfigurationError(ValueError):
    """Invalid game, agent or experiment configuration."""


class IllegalMoveError(ValueError):
    pass


class NotTerminalError(ValueError):
    pass


class Cell(enum.IntEnum):
    EMPTY = 0
    P0 = 1
    P1 = 2


class GameKind(str, enum.Enum):
    TICTACTOE = "tictactoe"
    CONNECTFOUR = "connectfour"
    HEX = "hex"


@dataclass(frozen=True)
class GameSpec:
    kind: GameKind
    width: int
    height: int
    k_in_row: Optional[int] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", GameKind(self.kind))
        except ValueError:
            raise ConfigurationError(f"unknown game kind {self.kind!r}") from None
        if self.width < 2 or self.height < 2:
            raise ConfigurationError(f"board dimensions must be >= 2, got {self.width}x{self.height}")
        if self.kind is GameKind.HEX:
            if self.width != self.height:
                raise ConfigurationError("Hex boards must be square")
            object.__setattr__(self, "k_in_row", None)
            return
        if self.k_in_row is None:
            raise ConfigurationError(f"{self.kind.value} needs a win-line length")
        if self.k_in_row < 1:
            raise ConfigurationError("win-line length must be positive")
        if self.kind is GameKind.TICTACTOE:
            if self.width != self.height:
                raise ConfigurationError("Tic-Tac-Toe boards must be square")
            if self.k_in_row > self.width:
                raise ConfigurationError("win-line length exceeds board size")
        elif self.k_in_row > max(self.width, self.height):
            raise ConfigurationError("win-line length exceeds board size")

    @property
    def cells(self) -> int:
        return self.width * self.height

    @property
    def token(self) -> str:
        """Text form, e.g. ``tictactoe:3x3:3`` or ``hex:3x3``."""
        dims = f"{self.kind.value}:{self.width}x{self.height}"
        return dims if self.k_in_row is None else f"{dims}:{self.k_in_row}"

    @classmethod
    def parse(cls, token: str) -> "GameSpec":
        parts = token.strip().lower().split(":")
        if len(parts) not in (2, 3):
            raise ConfigurationError(f"bad game token {token!r}")
        try:
            w, h = (int(x) for x in parts[1].split("x"))
            k = int(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise ConfigurationError(f"bad game token {token!r}") from None
        if parts[0] != GameKind.HEX.value and k is None:
            # n x n defaults to a full-line win
            k = w if parts[0] == GameKind.TICTACTOE.value else 4
        return cls(parts[0], w, h, k)

    def __str__(self):
        return self.token


def tictactoe(n: int = 3, k: Optional[int] = None) -> GameSpec:
    return GameSpec(GameKind.TICTACTOE, n, n, n if k is None else k)


def connect_four(width: int = 4, height: int = 4, k: int = 4) -> GameSpec:
    return GameSpec(GameKind.CONNECTFOUR, width, height, k)


def hex_game(n: int = 3) -> GameSpec:
    return GameSpec(GameKind.HEX, n, n)


def _line_masks(w: int, h: int, k: int) -> list[int]:
    masks = []
    for r in range(h):
        for c in range(w):
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                er, ec = r + dr * (k - 1), c + dc * (k - 1)
                if 0 <= er < h and 0 <= ec < w:
                    m = 0
                    for i in range(k):
                        m |= 1 << ((r + dr * i) * w + c + dc * i)
                    masks.append(m)
    return masks


class Rules:
    """Precomputed masks and bit-level move logic for one GameSpec."""

    def __init__(self, spec: GameSpec):
        self.spec = spec
        w, h = spec.width, spec.height
        self.width = w
        self.n = n = w * h
        self.full = (1 << n) - 1
        self.gravity = spec.kind is GameKind.CONNECTFOUR
        self.hex = spec.kind is GameKind.HEX
        self.prefix = spec.token + "|"
        if self.hex:
            nbrs = []
            for r in range(h):
                for c in range(w):
                    m = 0
                    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, 1), (1, -1)):
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < h and 0 <= cc < w:
                            m |= 1 << (rr * w + cc)
                    nbrs.append(m)
            self.neighbors = tuple(nbrs)
            top = (1 << w) - 1
            left = sum(1 << (r * w) for r in range(h))
            # role 0 joins top and bottom, role 1 joins left and right
            self.sides = ((top, top << (w * (h - 1))), (left, left << (w - 1)))
            self.lines = ()
            self.lines_by_cell = ()
        else:
            self.lines = tuple(_line_masks(w, h, spec.k_in_row))
            self.lines_by_cell = tuple(
                tuple(m for m in self.lines if m >> i & 1) for i in range(n)
            )
        # Connect Four columns listed bottom-up
        self.columns = tuple(tuple((r * w + c) for r in reversed(range(h))) for c in range(w))

    # -- move logic -------------------------------------------------------
    def legal(self, occ: int) -> list[int]:
        if self.gravity:
            return [c for c in range(self.width) if not occ >> c & 1]
        return [i for i in range(self.n) if not occ >> i & 1]

    def target_cell(self, occ: int, move: int) -> int:
        """Cell a move occupies, or -1 if the move is not playable."""
        if self.gravity:
            if not 0 <= move < self.width:
                return -1
            for cell in self.columns[move]:
                if not occ >> cell & 1:
                    return cell
            return -1
        if not 0 <= move < self.n or occ >> move & 1:
            return -1
        return move

    def wins_at(self, bits: int, cell: int, role: int) -> bool:
        """Whether placing at ``cell`` completed a win for ``bits``."""
        if self.hex:
            return self.connected(bits, role)
        for m in self.lines_by_cell[cell]:
            if bits & m == m:
                return True
        return False

    def connected(self, bits: int, role: int) -> bool:
        start, goal = self.sides[role]
        reached = frontier = bits & start
        nbrs = self.neighbors
        while frontier:
            if reached & goal:
                return True
            grow = 0
            f = frontier
            while f:
                low = f & -f
                grow |= nbrs[low.bit_length() - 1]
                f ^= low
            frontier = grow & bits & ~reached
            reached |= frontier
        return bool(reached & goal)

    def scan_winner(self, b0: int, b1: int) -> Optional[int]:
        """Whole-board status: winning role, DRAW, or None if ongoing."""
        if self.hex:
            if self.connected(b0, 0):
                return 0
            if self.connected(b1, 1):
                return 1
        else:
            for role, bits in ((0, b0), (1, b1)):
                for m in self.lines:
                    if bits & m == m:
                        return role
        if (b0 | b1) == self.full:
            return DRAW
        return None

    # -- playouts -----------------------------------------------------------
    def playout(self, b0: int, b1: int, to_move: int, random) -> int:
        """Random playout from an ongoing position; returns winner or DRAW.

        ``random`` is a zero-argument callable returning floats in [0, 1).
        """
        occ = b0 | b1
        if self.hex:
            empties = [i for i in range(self.n) if not occ >> i & 1]
            # Random fill: the full-board winner is whoever connected first.
            bits = b0
            t = to_move
            while empties:
                j = int(random() * len(empties))
                cell = empties[j]
                empties[j] = empties[-1]
                empties.pop()
                if t == 0:
                    bits |= 1 << cell
                t ^= 1
            return 0 if self.connected(bits, 0) else 1
        bits = [b0, b1]
        lbc = self.lines_by_cell
        t = to_move
        if self.gravity:
            w = self.width
            nxt = []
            for col in self.columns:
                for cell in col:
                    if not occ >> cell & 1:
                        nxt.append(cell)
                        break
                else:
                    nxt.append(-1)
            cols = [c for c in range(w) if nxt[c] >= 0]
            while cols:
                j = int(random() * len(cols))
                c = cols[j]
                cell = nxt[c]
                nxt[c] = cell - w
                if cell < w:
                    cols[j] = cols[-1]
                    cols.pop()
                mine = bits[t] | (1 << cell)
                bits[t] = mine
                for m in lbc[cell]:
                    if mine & m == m:
                        return t
                t ^= 1
            return DRAW
        empties = [i for i in range(self.n) if not occ >> i & 1]
        while empties:
            j = int(random() * len(empties))
            cell = empties[j]
            empties[j] = empties[-1]
            empties.pop()
            mine = bits[t] | (1 << cell)
            bits[t] = mine
            for m in lbc[cell]:
                if mine & m == m:
                    return t
            t ^= 1
        return DRAW


@functools.lru_cache(maxsize=None)
def rules_for(spec: GameSpec) -> Rules:
    return Rules(spec)


class GameState:
    """Immutable position: two bitboards, the role to move and a move count.

    ``status`` is the winning role, ``DRAW``, or None while the game runs.
    """

    __slots__ = ("rules", "b0", "b1", "to_move", "move_count", "status", "_key")

    def __init__(self, rules: Rules, b0: int, b1: int, to_move: int,
                 move_count: int, status: Optional[int]):
        self.rules = rules
        self.b0 = b0
        self.b1 = b1
        self.to_move = to_move
        self.move_count = move_count
        self.status = status
        self._key = None

    @property
    def spec(self) -> GameSpec:
        return self.rules.spec

    @property
    def cells(self) -> tuple[Cell, ...]:
        b0, b1 = self.b0, self.b1
        return tuple(
            Cell.P0 if b0 >> i & 1 else Cell.P1 if b1 >> i & 1 else Cell.EMPTY
            for i in range(self.rules.n)
        )

    @property
    def key(self) -> str:
        if self._key is None:
            self._key = canonical_key(self)
        return self._key

    @classmethod
    def from_cells(cls, spec: GameSpec, cells: Sequence[int] | str) -> "GameState":
        """Build and validate a position.

        ``cells`` is a sequence of Cell codes or a string over ``.xo``
        (whitespace and ``/`` are ignored), one entry per cell index.
        """
        if isinstance(cells, str):
            text = "".join(ch for ch in cells.lower() if ch not in " \n\t/|")
            try:
                cells = [_CELL_CHARS.index(ch) for ch in text]
            except ValueError:
                raise ConfigurationError(f"bad board string {cells!r}") from None
        rules = rules_for(spec)
        if len(cells) != rules.n:
            raise ConfigurationError(f"expected {rules.n} cells, got {len(cells)}")
        b0 = b1 = 0
        for i, c in enumerate(cells):
            if c == Cell.P0:
                b0 |= 1 << i
            elif c == Cell.P1:
                b1 |= 1 << i
            elif c != Cell.EMPTY:
                raise ConfigurationError(f"bad cell value {c!r}")
        n0, n1 = b0.bit_count(), b1.bit_count()
        if abs(n0 - n1) > 1:
            raise ConfigurationError("stone counts differ by more than one")
        if rules.gravity:
            occ = b0 | b1
            w = rules.width
            for cell in range(rules.n - w):
                if occ >> cell & 1 and not occ >> (cell + w) & 1:
                    raise ConfigurationError("floating Connect Four stone")
        to_move = 1 if n0 > n1 else 0
        return cls(rules, b0, b1, to_move, n0 + n1, rules.scan_winner(b0, b1))

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (self.rules.spec == other.rules.spec and self.b0 == other.b0
                and self.b1 == other.b1 and self.to_move == other.to_move)

    def __hash__(self):
        return hash((self.rules.spec, self.b0, self.b1, self.to_move))

    def __repr__(self):
        return f"GameState({self.key!r})"

    def render(self) -> str:
        w = self.rules.width
        s = "".join(_CELL_CHARS[c] for c in self.cells)
        rows = [s[i:i + w] for i in range(0, len(s), w)]
        if self.rules.hex:
            rows = [" " * r + " ".join(row) for r, row in enumerate(rows)]
        return "\n".join(rows)


def initial_state(spec: GameSpec) -> GameState:
    return GameState(rules_for(spec), 0, 0, 0, 0, None)


def legal_moves(state: GameState) -> list[int]:
    if state.status is not None:
        return []
    return state.rules.legal(state.b0 | state.b1)


def apply(state: GameState, move: int) -> GameState:
    rules = state.rules
    cell = -1 if state.status is not None else rules.target_cell(state.b0 | state.b1, move)
    if cell < 0:
        raise IllegalMoveError(f"illegal move {move!r} in state {state.key}")
    bit = 1 << cell
    b0, b1, t = state.b0, state.b1, state.to_move
    if t == 0:
        b0 |= bit
        won = rules.wins_at(b0, cell, 0)
    else:
        b1 |= bit
        won = rules.wins_at(b1, cell, 1)
    if won:
        status = t
    elif (b0 | b1) == rules.full:
        status = DRAW
    else:
        status = None
    return GameState(rules, b0, b1, t ^ 1, state.move_count + 1, status)


def is_terminal(state: GameState) -> bool:
    return state.status is not None


def goal(state: GameState, role: int) -> int:
    """GGP goal of ``role`` at a terminal state: 100 win, 50 draw, 0 loss."""
    status = state.status
    if status is None:
        raise NotTerminalError(f"goal requested for non-terminal state {state.key}")
    if status == DRAW:
        return TIE
    return WIN if status == role else LOSS


def goals_for(status: int) -> tuple[int, int]:
    if status == DRAW:
        return TIE, TIE
    return (WIN, LOSS) if status == 0 else (LOSS, WIN)


def canonical_key(state: GameState) -> str:
    """``<spec token>|<cells over .xo>|<role to move>``."""
    b0, b1 = state.b0, state.b1
    board = "".join(
        "x" if b0 >> i & 1 else "o" if b1 >> i & 1 else "." for i in range(state.rules.n)
    )
    return f"{state.rules.prefix}{board}|{state.to_move}"
