"""Token alphabets, level grids, binary sketches and the plain-text level format.

Levels are stored as a tuple of row strings, row 0 at the top of the screen.
Positions are ``(col, row)`` pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

CATEGORIES = frozenset(
    {"empty", "solid", "threat", "player-start", "goal", "key", "door", "pit"}
)

Position = tuple[int, int]


class LevelError(ValueError):
    """Base class for malformed level or alphabet input."""


class EmptyInput(LevelError):
    def __init__(self) -> None:
        super().__init__("level text is empty")


class UnknownToken(LevelError):
    def __init__(self, symbol: str, position: Position) -> None:
        super().__init__(f"unknown token {symbol!r} at (col={position[0]}, row={position[1]})")
        self.symbol = symbol
        self.position = position


class RaggedRows(LevelError):
    def __init__(self, expected: int, found: int, row: int) -> None:
        super().__init__(f"row {row} has length {found}, expected {expected}")
        self.expected = expected
        self.found = found
        self.row = row


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    symbol: str
    categories: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if len(self.symbol) != 1 or not self.symbol.isprintable():
            raise LevelError(f"token symbol must be one printable character, got {self.symbol!r}")
        unknown = self.categories - CATEGORIES
        if unknown:
            raise LevelError(f"unknown categories for {self.symbol!r}: {sorted(unknown)}")
        if "empty" in self.categories and len(self.categories) > 1:
            raise LevelError(f"empty token {self.symbol!r} cannot carry other categories")

    @property
    def is_empty(self) -> bool:
        return "empty" in self.categories


@dataclass(frozen=True)
class TokenAlphabet:
    tokens: tuple[Token, ...]
    empty: str = field(init=False)
    _by_symbol: Mapping[str, Token] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_symbol: dict[str, Token] = {}
        for tok in self.tokens:
            if tok.symbol in by_symbol:
                raise LevelError(f"duplicate token symbol {tok.symbol!r}")
            by_symbol[tok.symbol] = tok
        empties = [t.symbol for t in self.tokens if t.is_empty]
        if len(empties) != 1:
            raise LevelError(f"alphabet needs exactly one empty token, found {empties}")
        object.__setattr__(self, "empty", empties[0])
        object.__setattr__(self, "_by_symbol", by_symbol)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Iterable[str]]) -> TokenAlphabet:
        """Build an alphabet from ``{symbol: [category, ...]}``."""
        return cls(tuple(Token(sym, frozenset(cats)) for sym, cats in mapping.items()))

    @classmethod
    def load(cls, path: str | Path) -> TokenAlphabet:
        data = json.loads(Path(path).read_text())
        return cls.from_mapping(data["tokens"])

    def to_mapping(self) -> dict[str, list[str]]:
        return {t.symbol: sorted(t.categories) for t in self.tokens}

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._by_symbol

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, symbol: str) -> Token:
        return self._by_symbol[symbol]

    def with_category(self, category: str) -> frozenset[str]:
        return frozenset(t.symbol for t in self.tokens if category in t.categories)

    @property
    def threats(self) -> frozenset[str]:
        return self.with_category("threat")

    @property
    def solids(self) -> frozenset[str]:
        return self.with_category("solid")


@dataclass(frozen=True)
class Level:
    rows: tuple[str, ...]
    alphabet: TokenAlphabet = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.rows or not self.rows[0]:
            raise EmptyInput()
        width = len(self.rows[0])
        for r, row in enumerate(self.rows):
            if len(row) != width:
                raise RaggedRows(width, len(row), r)
            for c, ch in enumerate(row):
                if ch not in self.alphabet:
                    raise UnknownToken(ch, (c, r))

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def grid(self) -> str:
        """Row-major concatenation of every symbol."""
        return "".join(self.rows)

    def __getitem__(self, pos: Position) -> str:
        col, row = pos
        return self.rows[row][col]

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def positions(self) -> Iterator[Position]:
        for r in range(self.height):
            for c in range(self.width):
                yield (c, r)

    def find(self, symbols: Iterable[str]) -> list[Position]:
        """Row-major list of positions holding any of ``symbols``."""
        wanted = set(symbols)
        return [(c, r) for r, row in enumerate(self.rows) for c, ch in enumerate(row) if ch in wanted]

    def count(self, symbols: Iterable[str]) -> int:
        wanted = set(symbols)
        return sum(ch in wanted for ch in self.grid)

    def replace(self, cells: Mapping[Position, str]) -> Level:
        if not cells:
            return self
        rows = [list(r) for r in self.rows]
        for (c, r), sym in cells.items():
            rows[r][c] = sym
        return Level(tuple("".join(r) for r in rows), self.alphabet)

    def window(self, col: int, row: int, width: int, height: int) -> tuple[str, ...]:
        return tuple(r[col:col + width] for r in self.rows[row:row + height])

    def __str__(self) -> str:
        return serialize_level(self)


@dataclass(frozen=True)
class BinarySketch:
    width: int
    height: int
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.cells) != self.width * self.height:
            raise DimensionMismatch(
                f"{len(self.cells)} cells for a {self.width}x{self.height} sketch"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> BinarySketch:
        h, w = arr.shape
        return cls(w, h, tuple(int(v) for v in arr.reshape(-1)))

    def to_array(self) -> np.ndarray:
        return np.asarray(self.cells, dtype=np.int8).reshape(self.height, self.width)

    def __getitem__(self, pos: Position) -> int:
        return self.cells[pos[1] * self.width + pos[0]]

    def to_text(self) -> str:
        return "".join(
            "".join(str(v) for v in self.cells[r * self.width:(r + 1) * self.width]) + "\n"
            for r in range(self.height)
        )


def parse_level(text: str, alphabet: TokenAlphabet) -> Level:
    if not text or text.strip("\n") == "":
        raise EmptyInput()
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return Level(tuple(lines), alphabet)


def serialize_level(level: Level) -> str:
    return "".join(row + "\n" for row in level.rows)


def load_level(path: str | Path, alphabet: TokenAlphabet) -> Level:
    return parse_level(Path(path).read_text(), alphabet)


def binarize(level: Level) -> BinarySketch:
    empty = level.alphabet.empty
    return BinarySketch(level.width, level.height, tuple(int(ch != empty) for ch in level.grid))


def binary_array(level: Level) -> np.ndarray:
    """Same as :func:`binarize` but as an ``(height, width)`` int8 array."""
    codes = np.frombuffer(level.grid.encode("utf-32-le"), dtype=np.uint32)
    return (codes != ord(level.alphabet.empty)).astype(np.int8).reshape(level.height, level.width)


def strip_threats(level: Level, threats: Iterable[str]) -> Level:
    threats = set(threats)
    empty = level.alphabet.empty
    table = str.maketrans({t: empty for t in threats})
    return Level(tuple(r.translate(table) for r in level.rows), level.alphabet)


def preprocess_pits(level: Level) -> Level:
    """Mark every empty bottom-row cell with the alphabet's pit token."""
    pits = level.alphabet.with_category("pit")
    if len(pits) != 1:
        raise LevelError(f"alphabet needs exactly one pit token, found {sorted(pits)}")
    (pit,) = pits
    bottom = level.rows[-1].replace(level.alphabet.empty, pit)
    return Level(level.rows[:-1] + (bottom,), level.alphabet)
