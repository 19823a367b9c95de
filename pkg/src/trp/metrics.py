"""Population metrics: playability, plagiarism against the source, and self-similarity."""

from __future__ import annotations

import csv
import heapq
import io
import math
import statistics
from collections import deque
from dataclasses import astuple, dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .game import NoStartPosition
from .level import DimensionMismatch, Level, Position
from .platformer import AIRBORNE, MOVES, move_player

CSV_COLUMNS = ("playable", "plagiarism_mean", "plagiarism_std", "selfsim_mean", "selfsim_std", "n")


class PopulationTooSmall(ValueError):
    pass


# -- playability ---------------------------------------------------------

def reachable_cells(level: Level, start: Position) -> set[Position]:
    """Four-connected flood fill over non-solid cells."""
    solids = level.alphabet.solids
    seen = {start}
    queue = deque([start])
    while queue:
        col, row = queue.popleft()
        for nc, nr in ((col + 1, row), (col - 1, row), (col, row + 1), (col, row - 1)):
            if (0 <= nc < level.width and 0 <= nr < level.height and (nc, nr) not in seen
                    and level.rows[nr][nc] not in solids):
                seen.add((nc, nr))
                queue.append((nc, nr))
    return seen


def playability_dungeon(level: Level) -> bool:
    """Exactly one player, at least one key and door, and both reachable from the player."""
    alpha = level.alphabet
    starts = level.find(alpha.with_category("player-start"))
    keys = level.find(alpha.with_category("key"))
    doors = level.find(alpha.with_category("door"))
    if len(starts) != 1 or not keys or not doors:
        return False
    reach = reachable_cells(level, starts[0])
    return any(k in reach for k in keys) and any(d in reach for d in doors)


def platformer_start(level: Level, column: int = 2) -> Position:
    """The first non-solid cell scanning ``column`` upward from the bottom row."""
    solids = level.alphabet.solids
    for row in range(level.height - 1, -1, -1):
        if level.rows[row][column] not in solids:
            return (column, row)
    raise NoStartPosition(f"column {column} is fully solid")


def goal_columns(level: Level) -> frozenset[int]:
    """Columns holding a goal token; the last column when there is none."""
    cols = frozenset(c for c, _ in level.find(level.alphabet.with_category("goal")))
    return cols or frozenset({level.width - 1})


def playability_platformer(level: Level, jump_height: int = 3) -> bool:
    """Best-first search over the movement model from column 2 to a goal column.

    Enemies are ignored; falling off the screen or touching a pit is fatal.
    """
    alpha = level.alphabet
    solid = [[ch in alpha.solids for ch in row] for row in level.rows]
    pits = alpha.with_category("pit")
    height = level.height
    start = platformer_start(level)
    goals = goal_columns(level)

    def h(col: int) -> int:
        return min(abs(col - g) for g in goals)

    origin = (start[0], start[1], 0)
    seen = {origin}
    frontier = [(h(start[0]), 0, origin)]
    tick = 0
    while frontier:
        _, _, (col, row, ascent) = heapq.heappop(frontier)
        if col in goals:
            return True
        grounded = ascent == 0 and row + 1 < height and solid[row + 1][col]
        for action in (MOVES if grounded else AIRBORNE):
            nc, nr, na = move_player(solid, col, row, ascent, action, jump_height)
            if nr >= height or level.rows[nr][nc] in pits:
                continue
            node = (nc, nr, na)
            if node not in seen:
                seen.add(node)
                tick += 1
                heapq.heappush(frontier, (h(nc), tick, node))
    return False


# -- similarity ----------------------------------------------------------

def _codes(level: Level) -> np.ndarray:
    return np.frombuffer(level.grid.encode("utf-32-le"), dtype=np.uint32)


def _check_dims(a: Level, b: Level) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(f"{a.width}x{a.height} vs {b.width}x{b.height}")


def plagiarism(generated: Level, source: Level) -> float:
    """Percentage of positions holding the same token in both levels."""
    _check_dims(generated, source)
    same = sum(x == y for x, y in zip(generated.grid, source.grid))
    return 100.0 * same / (generated.width * generated.height)


def plagiarism_multi(generated: Level, sources: Sequence[Level]) -> float:
    """Highest plagiarism against any of several sources."""
    if not sources:
        raise ValueError("at least one source is required")
    return max(plagiarism(generated, s) for s in sources)


def pairwise_similarity(population: Sequence[Level]) -> list[float]:
    if len(population) < 2:
        raise PopulationTooSmall("self-similarity needs at least two levels")
    for lvl in population[1:]:
        _check_dims(population[0], lvl)
    codes = np.stack([_codes(lvl) for lvl in population])
    cells = codes.shape[1]
    return [100.0 * int(np.count_nonzero(codes[i] == codes[j])) / cells
            for i, j in combinations(range(len(population)), 2)]


def self_similarity(population: Sequence[Level]) -> float:
    """Mean plagiarism over every unordered pair of the population."""
    return statistics.fmean(pairwise_similarity(population))


# -- reports -------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    playable: float
    plagiarism_mean: float
    plagiarism_std: float
    selfsim_mean: float
    selfsim_std: float
    n: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.playable <= 1.0:
            raise ValueError("playable fraction must lie in [0, 1]")
        if self.n < 1:
            raise ValueError("population size must be >= 1")

    def row(self) -> list[str]:
        return [_fmt(v) for v in astuple(self)]

    def to_csv(self, label: str | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow((["label"] if label is not None else []) + list(CSV_COLUMNS))
        writer.writerow(([label] if label is not None else []) + self.row())
        return buf.getvalue()

    def pretty(self) -> str:
        sim = "n/a" if math.isnan(self.selfsim_mean) else f"{self.selfsim_mean:.2f} ± {self.selfsim_std:.2f}"
        return (f"playable {100 * self.playable:.0f}%  plagiarism {self.plagiarism_mean:.2f} ± "
                f"{self.plagiarism_std:.2f}  self-sim {sim}  n={self.n}")


def _fmt(v: float | int) -> str:
    if isinstance(v, int):
        return str(v)
    return "nan" if math.isnan(v) else f"{v:.4f}"


def _stdev(values: Sequence[float]) -> float:
    return statistics.stdev(values) if len(values) > 1 else 0.0


def is_playable(level: Level, kind: str, jump_height: int = 3) -> bool:
    if kind == "dungeon":
        return playability_dungeon(level)
    if kind == "platformer":
        try:
            return playability_platformer(level, jump_height)
        except NoStartPosition:
            return False
    raise ValueError(f"unknown domain kind {kind!r}")


def evaluate_population(levels: Sequence[Level], sources: Level | Sequence[Level], kind: str,
                        jump_height: int = 3) -> MetricsReport:
    """Playable fraction, plagiarism mean and sample stdev, and self-similarity.

    With several sources each level's plagiarism is its maximum over them.
    Self-similarity is NaN for a single-level population.
    """
    if not levels:
        raise PopulationTooSmall("population is empty")
    srcs = [sources] if isinstance(sources, Level) else list(sources)
    playable = sum(is_playable(lvl, kind, jump_height) for lvl in levels) / len(levels)
    plag = [plagiarism_multi(lvl, srcs) for lvl in levels]
    if len(levels) > 1:
        pairs = pairwise_similarity(levels)
        sim_mean, sim_std = statistics.fmean(pairs), _stdev(pairs)
    else:
        sim_mean = sim_std = math.nan
    return MetricsReport(playable, statistics.fmean(plag), _stdev(plag), sim_mean, sim_std, len(levels))


__all__ = [
    "CSV_COLUMNS",
    "MetricsReport",
    "PopulationTooSmall",
    "evaluate_population",
    "is_playable",
    "pairwise_similarity",
    "plagiarism",
    "plagiarism_multi",
    "playability_dungeon",
    "playability_platformer",
    "self_similarity",
]
