"""Output files: win-rate series CSV, tournament matrix CSV, Q-table
snapshots and run metadata.
"""
from __future__ import annotations

import csv
import json
import os
import platform
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from . import __version__
from .learning import QTable

SERIES_HEADER = ["match", "win_rate", "phase", "wins", "draws", "losses"]
SNAPSHOT_MAGIC = "#qtable"


class SnapshotFormatError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


@dataclass
class RunMetadata:
    config: dict[str, Any]
    seed: int
    version: str = __version__
    wall_time: float = 0.0
    notes: list[str] = field(default_factory=list)
    python: str = field(default_factory=platform.python_version)


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_series(series, path) -> None:
    points = series.points()
    if not points:
        raise ValueError(f"refusing to write empty series to {path}")
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for p in points:
            w.writerow([p.match, repr(p.win_rate), p.phase, p.wins, p.draws, p.losses])


def write_mean_series(rows, path) -> None:
    """Rows of ``(match, mean, variance, phase)`` across repetitions."""
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["match", "mean_win_rate", "variance", "phase"])
        for match, mean, var, phase in rows:
            w.writerow([match, repr(mean), repr(var), phase])


def write_matrix(matrix, path) -> None:
    labels = matrix.labels
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + labels)
        for i, row_label in enumerate(labels):
            cells = ["-" if i == j else repr(matrix.cells[i][j]) for j in range(len(labels))]
            w.writerow([row_label] + cells)


def format_matrix(matrix) -> str:
    labels = matrix.labels
    width = max(8, *(len(x) for x in labels)) + 2
    lines = ["".ljust(width) + "".join(x.rjust(width) for x in labels)]
    for i, row_label in enumerate(labels):
        cells = ["-" if i == j else f"{100 * matrix.cells[i][j]:.1f}%" for j in range(len(labels))]
        lines.append(row_label.ljust(width) + "".join(c.rjust(width) for c in cells))
    return "\n".join(lines)


def write_metadata(meta: RunMetadata, path) -> None:
    _ensure_parent(path)
    with open(path, "w") as fh:
        json.dump(asdict(meta), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def save_qtable(table: QTable, path, game: str = "", alpha: float = 0.0,
                gamma: float = 0.0, matches: int = 0) -> None:
    """Write ``state_key<TAB>move<TAB>value`` lines under a one-line header.

    Values use ``repr`` (shortest round-trip form), so reloading is exact.
    """
    _ensure_parent(path)
    header = (f"{SNAPSHOT_MAGIC}\tgame={game}\trole={table.role}\talpha={alpha!r}"
              f"\tgamma={gamma!r}\tmatches={matches}\tentries={len(table)}\n")
    with open(path, "w") as fh:
        fh.write(header)
        for key, move, value in table.entries():
            fh.write(f"{key}\t{move}\t{value!r}\n")


def read_snapshot(path) -> tuple[QTable, dict[str, str]]:
    with open(path) as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].startswith(SNAPSHOT_MAGIC + "\t"):
        raise SnapshotFormatError(path, 1, "missing snapshot header")
    header = {}
    for item in lines[0].split("\t")[1:]:
        k, sep, v = item.partition("=")
        if not sep:
            raise SnapshotFormatError(path, 1, f"bad header field {item!r}")
        header[k] = v
    try:
        role = int(header["role"])
        expected = int(header["entries"])
    except (KeyError, ValueError):
        raise SnapshotFormatError(path, 1, "header needs integer role and entries") from None
    if lines[-1] != "":
        raise SnapshotFormatError(path, len(lines), "file does not end with a newline")
    table = QTable(role)
    body = lines[1:-1]
    for lineno, line in enumerate(body, start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise SnapshotFormatError(path, lineno, "expected key, move and value")
        try:
            move, value = int(parts[1]), float(parts[2])
        except ValueError:
            raise SnapshotFormatError(path, lineno, "bad move or value") from None
        table.set(parts[0], move, value)
    if len(body) != expected or len(table) != expected:
        raise SnapshotFormatError(path, len(lines), f"expected {expected} entries, found {len(body)}")
    return table, header


def load_qtable(path) -> QTable:
    return read_snapshot(path)[0]
