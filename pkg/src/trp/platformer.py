"""Side-view platformer: gravity, fixed jump arcs, patrolling enemies and pits.

The player occupies a single cell.  Each step resolves horizontal movement
first, then vertical movement.  A jump starts only from supported ground and
rises ``jump_height`` cells over as many steps before gravity resumes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .game import Enemy, FailureEvent, GameState, IllegalAction, TerminalState, World
from .kit import KnowledgeKit
from .level import Level

# action -> (horizontal delta, jump pressed)
MOVES = {
    "left": (-1, False),
    "right": (1, False),
    "jump": (0, True),
    "jump_left": (-1, True),
    "jump_right": (1, True),
    "wait": (0, False),
}
AIRBORNE = ("left", "right", "wait")


@dataclass(frozen=True)
class PlatformerRules:
    jump_height: int = 3
    enemy_period: int = 2

    def __post_init__(self) -> None:
        if self.jump_height < 1 or self.enemy_period < 1:
            raise ValueError("jump height and enemy period must be >= 1")


def move_player(
    solid: Sequence[Sequence[bool]],
    col: int,
    row: int,
    ascent: int,
    action: str,
    jump_height: int = 3,
) -> tuple[int, int, int]:
    """Apply one action to the player's ``(col, row, ascent)``.

    The returned row equals ``len(solid)`` when the player falls off the
    bottom of the screen.  Rows above the screen count as solid ceiling.
    """
    height = len(solid)
    width = len(solid[0])
    dc, jump = MOVES[action]
    # take-off is judged on the cell the player stands on before moving
    if jump and ascent == 0 and row + 1 < height and solid[row + 1][col]:
        ascent = jump_height
    nc = col + dc
    if dc and 0 <= nc < width and not solid[row][nc]:
        col = nc
    grounded = row + 1 < height and solid[row + 1][col]
    if ascent > 0:
        if row > 0 and not solid[row - 1][col]:
            return col, row - 1, ascent - 1
        return col, row, 0
    if not grounded:
        return col, row + 1, 0
    return col, row, 0


class PlatformerWorld(World):
    actions = tuple(MOVES)

    def __init__(self, level: Level, kit: KnowledgeKit, rules: PlatformerRules | None = None) -> None:
        super().__init__(level, kit)
        self.rules = rules or PlatformerRules()
        pits = level.alphabet.with_category("pit")
        self.pit = min(pits) if pits else level.alphabet.empty
        self.static_threat_at = [[ch in self.static_threats for ch in row] for row in level.rows]
        self._patrol_cache: dict[Enemy, Enemy] = {}
        self._keys = frozenset(level.find(level.alphabet.with_category("key")))

    def legal_actions(self, state: GameState) -> tuple[str, ...]:
        """All six actions on the ground; in the air a jump press has no effect,
        so only ``left``, ``right`` and ``wait`` are offered."""
        if state.terminal:
            raise TerminalState("no actions from a terminal state")
        col, row = state.player
        if state.ascent == 0 and row + 1 < self.height and self.solid[row + 1][col]:
            return self.actions
        return AIRBORNE

    def step(self, state: GameState, action: str, rng: random.Random) -> GameState:
        world, player, enemies, gi, count, inventory, collected, ascent, failure = state
        if failure is not None or gi >= len(self.goals):
            raise TerminalState("cannot step a terminal state")
        if action not in MOVES:
            raise IllegalAction(action)
        col, row, ascent = move_player(self.solid, player[0], player[1], ascent, action, self.rules.jump_height)
        count += 1
        if row >= self.height:
            row = self.height - 1
            if self.kit.failures.below_screen:
                pos = (col, row)
                return GameState(world, pos, enemies, gi, count, inventory, collected, 0,
                                 FailureEvent(pos, self.pit))
        pos = (col, row)
        contact = self.kit.failures.threat_contact
        if contact:
            if self.static_threat_at[row][col]:
                return GameState(world, pos, enemies, gi, count, inventory, collected, ascent,
                                 FailureEvent(pos, self.level[pos]))
            for en in enemies:
                if en[1] == col and en[2] == row:
                    return GameState(world, pos, enemies, gi, count, inventory, collected, ascent,
                                     FailureEvent(pos, en[0]))
        state = GameState(world, pos, enemies, gi, count, inventory, collected, ascent, None)
        if pos in self._keys:
            state = self._pickup(state)
        k = len(self.goals)
        while gi < k and self._goal_holds(state, gi):
            gi += 1
        if gi >= k or not enemies:
            return state._replace(goal_index=gi) if gi != state.goal_index else state
        if count % self.rules.enemy_period == 0:
            moves = self._patrol_cache
            moved = []
            for en in enemies:
                nxt = moves.get(en)
                if nxt is None:
                    nxt = moves[en] = self._patrol(en)
                moved.append(nxt)
            enemies = tuple(moved)
        hit = None
        if contact:
            for en in enemies:
                if en[1] == col and en[2] == row:
                    hit = FailureEvent(pos, en[0])
                    break
        return GameState(world, pos, enemies, gi, count, state.inventory, state.collected, ascent, hit)

    def _patrol(self, en: Enemy) -> Enemy:
        # walk along the row; turn around at walls, screen edges and ledges
        solid = self.solid
        h = self.height
        nc = en.col + en.heading
        flying = not (en.row + 1 < h and solid[en.row + 1][en.col])
        if 0 <= nc < self.width and not solid[en.row][nc]:
            supported = en.row + 1 < h and solid[en.row + 1][nc]
            if supported or flying:
                return Enemy(en.symbol, nc, en.row, en.heading)
        return Enemy(en.symbol, en.col, en.row, -en.heading)
