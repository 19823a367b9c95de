"""The forward-model contract shared by every domain.

A :class:`World` binds a level to a knowledge kit and precomputes the static
terrain.  :class:`GameState` values are immutable; ``World.step`` returns a
new state.
"""

from __future__ import annotations

import enum
import random
from typing import NamedTuple

from .kit import KnowledgeKit
from .level import Level, Position


class GameError(Exception):
    pass


class TerminalState(GameError):
    pass


class IllegalAction(GameError):
    pass


class NoGoalCells(GameError):
    pass


class NoStartPosition(GameError):
    pass


class FailureEvent(NamedTuple):
    position: Position
    cause: str


class Enemy(NamedTuple):
    symbol: str
    col: int
    row: int
    heading: int = -1


class Outcome(enum.Enum):
    ONGOING = "ongoing"
    WIN = "win"
    LOSS = "loss"


class GameState(NamedTuple):
    world: World
    player: Position
    enemies: tuple[Enemy, ...] = ()
    goal_index: int = 0
    step_count: int = 0
    inventory: tuple[str, ...] = ()
    collected: frozenset[Position] = frozenset()
    ascent: int = 0
    failure: FailureEvent | None = None

    @property
    def won(self) -> bool:
        return self.goal_index >= len(self.world.goals)

    @property
    def terminal(self) -> bool:
        return self.failure is not None or self.goal_index >= len(self.world.goals)


class World:
    """Static view of one level under one kit.  Subclasses supply the rules."""

    actions: tuple[str, ...] = ()

    def __init__(self, level: Level, kit: KnowledgeKit) -> None:
        self.level = level
        self.kit = kit
        self.goals = kit.goals
        self.width = level.width
        self.height = level.height
        alpha = level.alphabet
        self.empty = alpha.empty
        solids = alpha.solids
        self.solid = [[ch in solids for ch in row] for row in level.rows]
        threats = set(kit.threats)
        self.mobile = frozenset(t for t in threats if "pit" not in alpha[t].categories)
        self.static_threats = frozenset(threats - self.mobile)
        starts = level.find(alpha.with_category("player-start"))
        self.start = starts[0] if starts else None
        self.enemy_start = tuple(
            Enemy(level[p], p[0], p[1]) for p in level.find(self.mobile)
        ) if kit.failures.threat_contact else ()
        self._goal_cells = [self._cells_for(g) for g in self.goals]
        self._goal_cols = [
            frozenset(c for c, _ in cells) if g.kind == "column" else frozenset()
            for g, cells in zip(self.goals, self._goal_cells)
        ]
        self.norm = self.width + self.height

    def _cells_for(self, goal) -> tuple[Position, ...]:
        cells = tuple(self.level.find(goal.token))
        if not cells:
            raise NoGoalCells(f"no cell holds goal token {goal.token!r}")
        return cells

    def terrain(self, pos: Position) -> str:
        """Static token at ``pos`` with player and mobile threats removed."""
        ch = self.level[pos]
        if ch in self.mobile or pos == self.start:
            return self.empty
        return ch

    def is_solid(self, col: int, row: int) -> bool:
        return self.solid[row][col]

    # -- contract -------------------------------------------------------

    def initial_state(self) -> GameState:
        if self.start is None:
            raise NoStartPosition("level has no player-start token")
        state = GameState(self, self.start, self.enemy_start)
        return self._advance_goals(state)

    def legal_actions(self, state: GameState) -> tuple[str, ...]:
        raise NotImplementedError

    def step(self, state: GameState, action: str, rng: random.Random) -> GameState:
        raise NotImplementedError

    def is_terminal(self, state: GameState) -> tuple[Outcome, FailureEvent | None]:
        if state.failure is not None:
            return Outcome.LOSS, state.failure
        if state.goal_index >= len(self.goals):
            return Outcome.WIN, None
        return Outcome.ONGOING, None

    def evaluate_state(self, state: GameState) -> float:
        """1 on a win, -1 on a loss, else ``1 - d / (width + height)``.

        ``d`` is the Manhattan distance from the player to the nearest cell
        satisfying the current goal (horizontal distance for column goals).
        """
        if state.failure is not None:
            return -1.0
        if state.goal_index >= len(self.goals):
            return 1.0
        return 1.0 - self.goal_distance(state) / self.norm

    def staged_value(self, state: GameState) -> float:
        """``evaluate_state`` spread over the goal sequence.

        With ``k`` goals of which ``g`` are done a non-terminal state scores
        ``(g + evaluate_state) / k``, so completing a goal never lowers the
        value even when the next goal is further away.
        """
        value = self.evaluate_state(state)
        if state.terminal:
            return value
        return (state.goal_index + value) / len(self.goals)

    def search_value(self, state: GameState, anchor: GameState) -> float:
        """Value backed up by the search for a rollout ending in ``state``.

        With a zero ``progress_gain`` this is :meth:`staged_value`.  Otherwise
        a non-terminal state scores ``gain * cells`` clipped to [-1, 1], where
        ``cells`` is the staged progress made since ``anchor``, in cells.
        """
        value = self.staged_value(state)
        gain = self.kit.progress_gain
        if not gain or state.terminal:
            return value
        cells = (value - self.staged_value(anchor)) * self.norm * len(self.goals)
        return max(-1.0, min(1.0, gain * cells))

    def goal_distance(self, state: GameState) -> int:
        gi = state.goal_index
        pc, pr = state.player
        if self.goals[gi].kind == "column":
            return min(abs(pc - c) for c in self._goal_cols[gi])
        cells = self._goal_cells[gi]
        if self.goals[gi].kind == "holds":
            cells = [p for p in cells if p not in state.collected] or cells
        return min(abs(pc - c) + abs(pr - r) for c, r in cells)

    # -- shared helpers -------------------------------------------------

    def _goal_holds(self, state: GameState, gi: int) -> bool:
        goal = self.goals[gi]
        if goal.kind == "holds":
            return goal.token in state.inventory
        if goal.kind == "reach":
            return self.level[state.player] == goal.token
        return state.player[0] in self._goal_cols[gi]

    def _advance_goals(self, state: GameState) -> GameState:
        gi = state.goal_index
        while gi < len(self.goals) and self._goal_holds(state, gi):
            gi += 1
        if gi != state.goal_index:
            return _with(state, goal_index=gi)
        return state

    def _pickup(self, state: GameState) -> GameState:
        pos = state.player
        ch = self.level[pos]
        if pos in state.collected or "key" not in self.level.alphabet[ch].categories:
            return state
        return _with(state, inventory=state.inventory + (ch,), collected=state.collected | {pos})

    @staticmethod
    def _enemy_at(enemies: tuple[Enemy, ...], pos: Position) -> Enemy | None:
        for en in enemies:
            if en.col == pos[0] and en.row == pos[1]:
                return en
        return None


def _with(state: GameState, **changes) -> GameState:
    return state._replace(**changes)


# Module-level spellings of the contract, for callers holding only a state.

def legal_actions(state: GameState) -> tuple[str, ...]:
    return state.world.legal_actions(state)


def step(state: GameState, action: str, rng: random.Random) -> GameState:
    return state.world.step(state, action, rng)


def evaluate_state(state: GameState) -> float:
    return state.world.evaluate_state(state)


def is_terminal(state: GameState) -> tuple[Outcome, FailureEvent | None]:
    return state.world.is_terminal(state)
