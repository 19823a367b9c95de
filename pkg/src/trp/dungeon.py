"""Top-down dungeon: orthogonal moves, keys, doors and randomly wandering enemies."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .game import Enemy, FailureEvent, GameState, IllegalAction, TerminalState, World
from .kit import KnowledgeKit
from .level import Level

MOVES = {
    "up": (0, -1),
    "down": (0, 1),
    "left": (-1, 0),
    "right": (1, 0),
    "wait": (0, 0),
}


@dataclass(frozen=True)
class DungeonRules:
    # (symbol, period) pairs; an enemy moves on steps divisible by its period
    enemy_periods: tuple[tuple[str, int], ...] = (("1", 1), ("2", 2), ("3", 3))

    def __post_init__(self) -> None:
        if any(p < 1 for _, p in self.enemy_periods):
            raise ValueError("enemy periods must be >= 1")

    def period(self, symbol: str) -> int:
        return dict(self.enemy_periods).get(symbol, 1)


class DungeonWorld(World):
    actions = tuple(MOVES)

    def __init__(self, level: Level, kit: KnowledgeKit, rules: DungeonRules | None = None) -> None:
        super().__init__(level, kit)
        self.rules = rules or DungeonRules()
        self._periods = dict(self.rules.enemy_periods)
        w, h = self.width, self.height
        self._targets: dict[tuple[int, int], dict[str, tuple[int, int]]] = {}
        for r in range(h):
            for c in range(w):
                self._targets[(c, r)] = {
                    name: (c + dc, r + dr) for name, (dc, dr) in MOVES.items()
                    if 0 <= c + dc < w and 0 <= r + dr < h and not self.solid[r + dr][c + dc]
                }
        self._open_moves = {pos: tuple(t) for pos, t in self._targets.items()}
        self._neighbours = {
            pos: tuple(p for m, p in t.items() if m != "wait") for pos, t in self._targets.items()
        }
        keys = level.alphabet.with_category("key")
        self._keys = {p: level[p] for p in level.find(keys)}

    def legal_actions(self, state: GameState) -> tuple[str, ...]:
        if state.terminal:
            raise TerminalState("no actions from a terminal state")
        return self._open_moves[state.player]

    def step(self, state: GameState, action: str, rng: random.Random) -> GameState:
        world, player, enemies, gi, count, inventory, collected, _, failure = state
        k = len(self.goals)
        if failure is not None or gi >= k:
            raise TerminalState("cannot step a terminal state")
        pos = self._targets[player].get(action)
        if pos is None:
            raise IllegalAction(action)
        count += 1
        col, row = pos
        for en in enemies:
            if en[1] == col and en[2] == row:
                return GameState(world, pos, enemies, gi, count, inventory, collected, 0,
                                 FailureEvent(pos, en[0]))
        key = self._keys.get(pos)
        if key is not None and pos not in collected:
            inventory = inventory + (key,)
            collected = collected | {pos}
        state = GameState(world, pos, enemies, gi, count, inventory, collected, 0, None)
        while gi < k and self._goal_holds(state, gi):
            gi += 1
        if gi >= k:
            return state._replace(goal_index=gi)

        periods = self._periods
        neighbours = self._neighbours
        moved = []
        hit = None
        for en in enemies:
            if count % periods.get(en[0], 1) == 0:
                options = neighbours[(en[1], en[2])]
                if options:
                    c, r = options[int(rng.random() * len(options))]
                    en = Enemy(en[0], c, r, en[3])
            if hit is None and en[1] == col and en[2] == row:
                hit = FailureEvent(pos, en[0])
            moved.append(en)
        return GameState(world, pos, tuple(moved), gi, count, inventory, collected, 0, hit)
