import random
from collections import deque

import pytest

from qmlearn.games import (
    DRAW,
    Cell,
    ConfigurationError,
    GameKind,
    GameSpec,
    GameState,
    IllegalMoveError,
    NotTerminalError,
    apply,
    canonical_key,
    connect_four,
    goal,
    hex_game,
    initial_state,
    is_terminal,
    legal_moves,
    rules_for,
    tictactoe,
)

TTT3 = tictactoe(3)
C4 = connect_four(4, 4, 4)
HEX3 = hex_game(3)


# -- independent reference rules, written against cell lists ------------------

def ref_line_winner(cells, w, h, k):
    for r in range(h):
        for c in range(w):
            p = cells[r * w + c]
            if p == 0:
                continue
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                if all(
                    0 <= r + dr * i < h and 0 <= c + dc * i < w
                    and cells[(r + dr * i) * w + c + dc * i] == p
                    for i in range(k)
                ):
                    return p - 1
    return None


def ref_hex_connected(cells, n, role):
    """Flood fill over (row, col) with the six rhombus neighbours."""
    mark = role + 1
    if role == 0:
        starts = [(0, c) for c in range(n)]
        done = lambda r, c: r == n - 1
    else:
        starts = [(r, 0) for r in range(n)]
        done = lambda r, c: c == n - 1
    todo = deque(p for p in starts if cells[p[0] * n + p[1]] == mark)
    seen = set(todo)
    while todo:
        r, c = todo.popleft()
        if done(r, c):
            return True
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, 1), (1, -1)):
            q = (r + dr, c + dc)
            if 0 <= q[0] < n and 0 <= q[1] < n and q not in seen and cells[q[0] * n + q[1]] == mark:
                seen.add(q)
                todo.append(q)
    return False


def ref_status(state):
    spec = state.spec
    cells = [int(c) for c in state.cells]
    if spec.kind is GameKind.HEX:
        for role in (0, 1):
            if ref_hex_connected(cells, spec.width, role):
                return role
    else:
        win = ref_line_winner(cells, spec.width, spec.height, spec.k_in_row)
        if win is not None:
            return win
    return DRAW if all(cells) else None


# -- examples -------------------------------------------------------------------

@pytest.mark.parametrize("spec", [TTT3, C4, HEX3])
def test_initial_state_is_empty(spec):
    s = initial_state(spec)
    assert s.cells == (Cell.EMPTY,) * spec.cells
    assert s.to_move == 0 and s.move_count == 0
    assert not is_terminal(s)


def test_legal_moves_examples():
    assert legal_moves(initial_state(TTT3)) == list(range(9))
    s = initial_state(C4)
    for _ in range(2):
        s = apply(apply(s, 1), 1)
    assert not is_terminal(s)
    assert legal_moves(s) == [0, 2, 3]


def test_apply_examples():
    s = apply(initial_state(TTT3), 4)
    assert s.cells[4] == Cell.P0 and s.to_move == 1 and s.move_count == 1
    s = apply(initial_state(C4), 2)
    # bottom row is the last row
    assert s.cells[3 * 4 + 2] == Cell.P0
    assert sum(c != Cell.EMPTY for c in s.cells) == 1
    with pytest.raises(IllegalMoveError, match="illegal move 4"):
        apply(apply(initial_state(TTT3), 4), 4)
    with pytest.raises(IllegalMoveError):
        apply(initial_state(TTT3), 9)


def test_apply_is_pure():
    s = initial_state(TTT3)
    apply(s, 0)
    assert s.cells == (Cell.EMPTY,) * 9 and s.to_move == 0


def test_terminal_examples():
    s = GameState.from_cells(TTT3, "xxx/oo./...")
    assert is_terminal(s) and legal_moves(s) == []
    assert goal(s, 0) == 100 and goal(s, 1) == 0
    draw = GameState.from_cells(TTT3, "xox/xox/oxo")
    assert is_terminal(draw)
    assert goal(draw, 0) == goal(draw, 1) == 50
    with pytest.raises(NotTerminalError):
        goal(initial_state(TTT3), 0)


def test_hex_chain_terminal_matches_flood_fill():
    # role 0 (x) joins top and bottom along column 1; role 1 has no chain
    s = GameState.from_cells(HEX3, ".xo/.xo/ox.")
    cells = [int(c) for c in s.cells]
    assert ref_hex_connected(cells, 3, 0) and not ref_hex_connected(cells, 3, 1)
    assert is_terminal(s)
    assert goal(s, 0) == 100 and goal(s, 1) == 0
    # o chains 6 -> 4 -> 2 along the (-1, +1) adjacency, joining left and right
    s = GameState.from_cells(HEX3, "x.o/xo./ox.")
    cells = [int(c) for c in s.cells]
    assert ref_hex_connected(cells, 3, 1)
    assert s.status == 1 and goal(s, 1) == 100


def test_canonical_key_examples():
    a = apply(initial_state(TTT3), 4)
    b = apply(initial_state(TTT3), 4)
    assert canonical_key(a) == canonical_key(b)
    same_board = GameState.from_cells(TTT3, "x...o....")
    other_mover = GameState(same_board.rules, same_board.b0, same_board.b1, 1, 2, None)
    assert canonical_key(same_board) != canonical_key(other_mover)
    assert canonical_key(initial_state(tictactoe(3))) != canonical_key(initial_state(tictactoe(4)))
    assert canonical_key(apply(initial_state(TTT3), 4)) == "tictactoe:3x3:3|....x....|1"


# -- spec validation and tokens ---------------------------------------------

@pytest.mark.parametrize("token", ["tictactoe:3x3:3", "connectfour:4x4:4", "hex:3x3",
                                   "connectfour:7x6:4", "tictactoe:5x5:5"])
def test_token_round_trip(token):
    assert GameSpec.parse(token).token == token


@pytest.mark.parametrize("token", ["chess:8x8", "tictactoe:3x4:3", "tictactoe:3x3:4",
                                   "hex:3x4", "tictactoe:1x1:1", "tictactoe:3by3", "hex"])
def test_bad_specs_rejected(token):
    with pytest.raises(ConfigurationError):
        GameSpec.parse(token)


def test_from_cells_validates():
    with pytest.raises(ConfigurationError):
        GameState.from_cells(TTT3, "xxx/.../...")
    with pytest.raises(ConfigurationError):
        GameState.from_cells(C4, "x.../..../..../....")  # floating stone


# -- properties over random playouts ---------------------------------------

def check_invariants(s):
    cells = s.cells
    n0, n1 = cells.count(Cell.P0), cells.count(Cell.P1)
    assert 0 <= n0 - n1 <= 1
    assert s.to_move == (0 if n0 == n1 else 1)
    assert s.move_count == n0 + n1
    if s.spec.kind is GameKind.CONNECTFOUR:
        w = s.spec.width
        for i in range(len(cells) - w):
            assert not (cells[i] != Cell.EMPTY and cells[i + w] == Cell.EMPTY)
    # incremental status agrees with a whole-board scan and the reference rules
    assert s.status == s.rules.scan_winner(s.b0, s.b1) == ref_status(s)
    if is_terminal(s):
        assert legal_moves(s) == []
        assert goal(s, 0) + goal(s, 1) == 100
    else:
        assert legal_moves(s)


@pytest.mark.parametrize("spec", [TTT3, C4, HEX3, tictactoe(4), connect_four(5, 4, 3)])
def test_random_play_closure(spec):
    rng = random.Random(spec.token)
    games = 10_000 if spec in (TTT3, C4, HEX3) else 1000
    for _ in range(games):
        s = initial_state(spec)
        check_invariants(s)
        while not is_terminal(s):
            s = apply(s, rng.choice(legal_moves(s)))
            check_invariants(s)
        assert s.move_count <= spec.cells
        if spec.kind is GameKind.HEX:
            assert {goal(s, 0), goal(s, 1)} == {0, 100}


def test_reachable_keys_are_injective():
    start = initial_state(TTT3)
    seen = {start}
    todo = deque([start])
    while todo:
        s = todo.popleft()
        for a in legal_moves(s):
            c = apply(s, a)
            if c not in seen:
                seen.add(c)
                todo.append(c)
    assert len(seen) == 5478
    assert len({canonical_key(s) for s in seen}) == 5478


def test_rules_are_shared_per_spec():
    assert rules_for(GameSpec.parse("hex:3x3")) is rules_for(hex_game(3))
