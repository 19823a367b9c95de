"""Sketch reconstruction, partition fill and threat repopulation."""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .game import World
from .kit import KnowledgeKit, SearchBudget
from .level import BinarySketch, DimensionMismatch, Level, Position, binary_array, strip_threats
from .mcts import PlaythroughRecord, collect_records

POLICIES = ("path-carve",)


class EmptyRecord(ValueError):
    pass


class SegmentLargerThanSource(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Segment:
    col: int
    row: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("segment dimensions must be >= 1")

    @property
    def origin(self) -> Position:
        return (self.col, self.row)

    @property
    def area(self) -> int:
        return self.width * self.height

    def cells(self) -> Iterable[Position]:
        for r in range(self.row, self.row + self.height):
            for c in range(self.col, self.col + self.width):
                yield (c, r)


@dataclass(frozen=True)
class ThreatCandidate:
    position: Position
    cause: str
    deaths: int
    relevance: float


def derive_rng(seed: int, label: str) -> random.Random:
    """An independent stream for one pipeline stage, stable across runs and platforms."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# -- reconstruction ------------------------------------------------------

def reconstruct_sketch(record: PlaythroughRecord, width: int, height: int,
                       policy: str = "path-carve") -> BinarySketch:
    """Visited positions become 0 (open), everything else 1 (structure)."""
    if policy not in POLICIES:
        raise ValueError(f"unknown reconstruction policy {policy!r}")
    if not record.visited:
        raise EmptyRecord("the playthrough record visits no positions")
    arr = np.ones((height, width), dtype=np.int8)
    for col, row in record.visited:
        if not (0 <= col < width and 0 <= row < height):
            raise DimensionMismatch(f"visited position {(col, row)} outside {width}x{height}")
        arr[row, col] = 0
    return BinarySketch.from_array(arr)


# -- partition -----------------------------------------------------------

def partition_sketch(width: int, height: int, s: int, rng: random.Random) -> list[Segment]:
    """Split regions recursively until both sides are at most ``s``.

    An oversized region is cut along its longer oversized axis at a uniform
    interior line.  The result tiles the grid.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be >= 1")
    out: list[Segment] = []
    stack = [Segment(0, 0, width, height)]
    while stack:
        seg = stack.pop()
        wide, tall = seg.width > s, seg.height > s
        if not (wide or tall):
            out.append(seg)
            continue
        vertical_cut = wide and (not tall or seg.width >= seg.height)
        if vertical_cut:
            cut = rng.randint(1, seg.width - 1)
            a = Segment(seg.col, seg.row, cut, seg.height)
            b = Segment(seg.col + cut, seg.row, seg.width - cut, seg.height)
        else:
            cut = rng.randint(1, seg.height - 1)
            a = Segment(seg.col, seg.row, seg.width, cut)
            b = Segment(seg.col, seg.row + cut, seg.width, seg.height - cut)
        stack.extend((b, a))
    return out


# -- matching ------------------------------------------------------------

def binary_similarity(a: BinarySketch | np.ndarray, b: BinarySketch | np.ndarray) -> int:
    """Number of cells at which the two binary grids agree."""
    x = a.to_array() if isinstance(a, BinarySketch) else np.asarray(a)
    y = b.to_array() if isinstance(b, BinarySketch) else np.asarray(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"cannot compare {x.shape} with {y.shape}")
    return int(np.count_nonzero(x == y))


def window_scores(target: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Similarity of ``target`` with every same-sized window of ``source``.

    Entry ``[r, c]`` scores the window whose top-left corner is ``(c, r)``.
    """
    h, w = target.shape
    views = np.lib.stride_tricks.sliding_window_view(source, (h, w))
    return np.count_nonzero(views == target, axis=(2, 3))


def best_windows(sketch: BinarySketch, seg: Segment, source_bits: np.ndarray) -> list[Position]:
    sh, sw = source_bits.shape
    if seg.width > sw or seg.height > sh:
        raise SegmentLargerThanSource(
            f"segment {seg.width}x{seg.height} exceeds source {sw}x{sh}")
    target = sketch.to_array()[seg.row:seg.row + seg.height, seg.col:seg.col + seg.width]
    scores = window_scores(target, source_bits)
    rows, cols = np.nonzero(scores == scores.max())
    return [(int(c), int(r)) for r, c in zip(rows, cols)]


def match_segment(sketch: BinarySketch, seg: Segment, source: Level,
                  rng: random.Random, source_bits: np.ndarray | None = None) -> tuple[str, ...]:
    """Token rows of a uniformly chosen best-scoring source window for ``seg``."""
    bits = binary_array(source) if source_bits is None else source_bits
    options = best_windows(sketch, seg, bits)
    col, row = options[rng.randrange(len(options))]
    return source.window(col, row, seg.width, seg.height)


@dataclass
class FillTrace:
    segments: list[Segment] = field(default_factory=list)
    patches: list[tuple[str, ...]] = field(default_factory=list)


def fill(sketch: BinarySketch, source: Level, s: int, rng: random.Random,
         trace: FillTrace | None = None) -> Level:
    """Fill each segment with a matching source patch, largest segments first."""
    segments = partition_sketch(sketch.width, sketch.height, s, rng)
    segments.sort(key=lambda g: (-g.area, g.row, g.col))
    bits = binary_array(source)
    grid = [[source.alphabet.empty] * sketch.width for _ in range(sketch.height)]
    for seg in segments:
        patch = match_segment(sketch, seg, source, rng, bits)
        for dr, line in enumerate(patch):
            grid[seg.row + dr][seg.col:seg.col + seg.width] = line
        if trace is not None:
            trace.segments.append(seg)
            trace.patches.append(patch)
    return Level(tuple("".join(r) for r in grid), source.alphabet)


# -- threats -------------------------------------------------------------

def rank_threats(record: PlaythroughRecord) -> list[ThreatCandidate]:
    """Group failures by (position, cause) and rank them by share of all deaths."""
    tally: Counter = Counter()
    for ev, n in record.failures.items():
        if n > 0:
            tally[(ev.position, ev.cause)] += n
    total = sum(tally.values())
    if total == 0:
        return []
    ranked = [ThreatCandidate(pos, cause, n, n / total) for (pos, cause), n in tally.items()]
    ranked.sort(key=lambda t: (-t.deaths, t.position[1], t.position[0], t.cause))
    return ranked


def place_threats(level: Level, ranked: Sequence[ThreatCandidate], e: float) -> Level:
    """Walk the ranking placing threats on empty cells until the placed relevance reaches ``e``."""
    if not 0.0 <= e <= 1.0:
        raise ValueError("e must lie in [0, 1]")
    if e == 0.0:
        return level
    empty = level.alphabet.empty
    placed: dict[Position, str] = {}
    total = 0.0
    for cand in ranked:
        if total >= e:
            break
        pos = cand.position
        if not level.in_bounds(pos) or level[pos] != empty or pos in placed:
            continue
        placed[pos] = cand.cause
        total += cand.relevance
    return level.replace(placed) if placed else level


# -- repair --------------------------------------------------------------

def nearest_empty(level: Level, target: Position, taken: Iterable[Position] = ()) -> Position | None:
    """Closest empty cell to ``target`` by Manhattan distance, ties row-major."""
    empty = level.alphabet.empty
    blocked = set(taken)
    best: tuple[int, int, int] | None = None
    for row, line in enumerate(level.rows):
        for col, ch in enumerate(line):
            if ch != empty or (col, row) in blocked:
                continue
            key = (abs(col - target[0]) + abs(row - target[1]), row, col)
            if best is None or key < best:
                best = key
    return None if best is None else (best[2], best[1])


def repair(level: Level, source: Level, required: Iterable[str]) -> Level:
    """Keep exactly one player start and restore any missing required token.

    Player starts copied in by the fill are cleared unless they sit on the
    source start; if none is left, one goes on the source start when it is
    empty, else on the nearest empty cell.  A missing required token is
    placed on the empty cell nearest its first source position.
    """
    alpha = level.alphabet
    empty = alpha.empty
    start_tokens = alpha.with_category("player-start")
    src_starts = source.find(start_tokens)
    anchor = src_starts[0] if src_starts else None
    changes = {p: empty for p in level.find(start_tokens) if p != anchor}
    level = level.replace(changes)
    if anchor is not None and level[anchor] not in start_tokens:
        spot = anchor if level[anchor] == empty else nearest_empty(level, anchor)
        if spot is not None:
            level = level.replace({spot: source[anchor]})

    for token in dict.fromkeys(required):
        if token in start_tokens or level.count([token]) > 0:
            continue
        src = source.find([token])
        if not src:
            continue
        spot = nearest_empty(level, src[0])
        if spot is not None:
            level = level.replace({spot: token})
    return level


def required_tokens(kit: KnowledgeKit, extra: Iterable[str] = ()) -> tuple[str, ...]:
    return tuple(dict.fromkeys([g.token for g in kit.goals] + list(extra)))


# -- end to end ----------------------------------------------------------

@dataclass
class Generation:
    level: Level
    sketch: BinarySketch
    record: PlaythroughRecord
    ranked: list[ThreatCandidate]
    trace: FillTrace
    filled: Level


def generate(
    source: Level,
    kit: KnowledgeKit,
    budget: SearchBudget,
    seed: int,
    world_factory: Callable[[Level, KnowledgeKit], World],
    required: Iterable[str] = (),
) -> Generation:
    """Play ``source``, sketch the search, fill the sketch and repopulate threats.

    ``world_factory`` builds the domain forward model.  Playthroughs use seeds
    ``seed .. seed + t - 1``; the partition and window draws use a stream
    derived from ``seed``.
    """
    world = world_factory(source, kit)
    record = collect_records(world, kit.t, budget, seed)
    sketch = reconstruct_sketch(record, source.width, source.height)
    stripped = strip_threats(source, kit.threats)
    trace = FillTrace()
    filled = fill(sketch, stripped, kit.s, derive_rng(seed, "fill"), trace)
    ranked = rank_threats(record)
    level = place_threats(filled, ranked, kit.e)
    level = repair(level, source, required_tokens(kit, required))
    return Generation(level, sketch, record, ranked, trace, filled)
