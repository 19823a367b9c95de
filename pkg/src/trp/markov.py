"""Markov-chain baseline: 2x2 L-shaped contexts predicting the top-right tile."""

from __future__ import annotations

import bisect
import itertools
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .level import Level, TokenAlphabet

# (bottom-left, bottom-right, top-left)
Context = tuple[str, str, str]


class EmptyTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class MarkovModel:
    table: Mapping[Context, tuple[tuple[str, float], ...]]
    alphabet: TokenAlphabet
    columns: tuple[tuple[str, ...], ...]
    rows: tuple[str, ...]

    def distribution(self, context: Context) -> dict[str, float]:
        return dict(self.table.get(context, ()))

    def to_json(self) -> dict[str, Any]:
        return {
            "contexts": [
                {"bottom_left": bl, "bottom_right": br, "top_left": tl,
                 "next": {tok: p for tok, p in dist}}
                for (bl, br, tl), dist in sorted(self.table.items())
            ]
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


def train(levels: Sequence[Level]) -> MarkovModel:
    """Count every 2x2 window and normalise per context.

    Every occurrence carries equal weight, so duplicating the training set
    leaves the model unchanged.
    """
    if not levels:
        raise EmptyTrainingSet("at least one training level is required")
    alphabet = levels[0].alphabet
    counts: dict[Context, Counter] = defaultdict(Counter)
    for lvl in levels:
        if lvl.alphabet != alphabet:
            raise ValueError("training levels must share one alphabet")
        rows = lvl.rows
        for r in range(lvl.height - 1):
            top, bottom = rows[r], rows[r + 1]
            for c in range(lvl.width - 1):
                counts[(bottom[c], bottom[c + 1], top[c])][top[c + 1]] += 1
    table = {}
    for ctx, counter in counts.items():
        total = sum(counter.values())
        table[ctx] = tuple((tok, n / total) for tok, n in sorted(counter.items()))
    columns = tuple(
        tuple(lvl.rows[r][c] for r in range(lvl.height)) for lvl in levels for c in range(lvl.width)
    )
    return MarkovModel(table, alphabet, columns, tuple(row for lvl in levels for row in lvl.rows))


def _fit(seq: Sequence[str], n: int, empty: str, align_end: bool) -> list[str]:
    seq = list(seq)
    if len(seq) >= n:
        return seq[len(seq) - n:] if align_end else seq[:n]
    pad = [empty] * (n - len(seq))
    return pad + seq if align_end else seq + pad


def _sample(dist: tuple[tuple[str, float], ...], rng: random.Random) -> str:
    cum = list(itertools.accumulate(p for _, p in dist))
    i = bisect.bisect_right(cum, rng.random() * cum[-1])
    return dist[min(i, len(dist) - 1)][0]


def mc_generate(model: MarkovModel, width: int, height: int, rng: random.Random) -> Level:
    """Sample a level column by column, left to right, each column bottom to top.

    The left column and bottom row are copied from a random training column
    and row (bottom-aligned and left-aligned respectively, padded with empty).
    Contexts never seen in training emit the empty token.
    """
    if width < 2 or height < 2:
        raise ValueError("generated levels must be at least 2x2")
    empty = model.alphabet.empty
    grid = [[empty] * width for _ in range(height)]
    left = _fit(model.columns[rng.randrange(len(model.columns))], height, empty, align_end=True)
    for r in range(height):
        grid[r][0] = left[r]
    bottom = _fit(model.rows[rng.randrange(len(model.rows))], width, empty, align_end=False)
    grid[height - 1] = bottom
    for c in range(1, width):
        for r in range(height - 2, -1, -1):
            dist = model.table.get((grid[r + 1][c - 1], grid[r + 1][c], grid[r][c - 1]))
            grid[r][c] = _sample(dist, rng) if dist else empty
    return Level(tuple("".join(row) for row in grid), model.alphabet)
