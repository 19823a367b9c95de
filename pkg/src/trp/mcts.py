"""UCT Monte Carlo tree search playthroughs and the records harvested from them."""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any

from .game import FailureEvent, GameState, NoGoalCells, World
from .kit import SearchBudget
from .level import Position

RETRIES = 3


class UnvisitedNode(ValueError):
    pass


@dataclass
class PlaythroughRecord:
    visited: set[Position] = field(default_factory=set)
    failures: Counter = field(default_factory=Counter)
    success: bool = False
    path: list[Position] = field(default_factory=list)

    def merge(self, other: PlaythroughRecord) -> PlaythroughRecord:
        return PlaythroughRecord(
            self.visited | other.visited,
            self.failures + other.failures,
            self.success and other.success,
            self.path + other.path,
        )

    def copy(self) -> PlaythroughRecord:
        return PlaythroughRecord(set(self.visited), Counter(self.failures), self.success, list(self.path))

    @property
    def deaths(self) -> int:
        return sum(self.failures.values())

    def to_json(self) -> dict[str, Any]:
        return {
            "success": self.success,
            "executed_path": [list(p) for p in self.path],
            "visited_positions": sorted(list(p) for p in self.visited),
            "failure_events": [
                {"position": list(ev.position), "cause": ev.cause, "count": n}
                for ev, n in sorted(self.failures.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> PlaythroughRecord:
        failures: Counter = Counter()
        for ev in data["failure_events"]:
            failures[FailureEvent(tuple(ev["position"]), ev["cause"])] += ev.get("count", 1)
        return cls(
            {tuple(p) for p in data["visited_positions"]},
            failures,
            bool(data["success"]),
            [tuple(p) for p in data["executed_path"]],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


class SearchNode:
    __slots__ = ("state", "parent", "action", "children", "untried", "visits", "total")

    def __init__(self, state: GameState, parent: SearchNode | None = None, action: str | None = None) -> None:
        self.state = state
        self.parent = parent
        self.action = action
        self.children: dict[str, SearchNode] = {}
        self.untried: list[str] = [] if state.terminal else list(state.world.legal_actions(state))
        self.visits = 0
        self.total = 0.0

    @property
    def value(self) -> float:
        return self.total / self.visits if self.visits else 0.0

    @property
    def position(self) -> Position:
        return self.state.player


def uct_value(node: SearchNode, c: float) -> float:
    """Mean value plus the UCB1 exploration bonus ``c * sqrt(ln N / n)``."""
    if node.visits < 1:
        raise UnvisitedNode("UCT is undefined for an unvisited node")
    parent_visits = node.parent.visits if node.parent is not None else node.visits
    return node.total / node.visits + c * math.sqrt(math.log(parent_visits) / node.visits)


def select_child(node: SearchNode, c: float, rng: random.Random) -> SearchNode:
    log_n = math.log(node.visits)
    best: list[SearchNode] = []
    best_score = -math.inf
    for child in node.children.values():
        score = child.total / child.visits + c * math.sqrt(log_n / child.visits)
        if score > best_score:
            best_score = score
            best = [child]
        elif score == best_score:
            best.append(child)
    return best[0] if len(best) == 1 else best[rng.randrange(len(best))]


def mcts_iteration(
    root: SearchNode,
    c: float,
    rollout_depth: int | None,
    rng: random.Random,
    record: PlaythroughRecord,
) -> SearchNode:
    """Selection, expansion, random rollout and backpropagation, once.

    The tree is open-loop: the forward model is re-stepped along the selected
    path with fresh randomness, and each node keeps its latest sampled state.
    """
    world = root.state.world
    node = root
    state = root.state
    while not state.terminal:
        if not node.untried and not node.children:
            node.untried = list(world.legal_actions(state))
        if node.untried:
            action = node.untried.pop(rng.randrange(len(node.untried)))
            state = world.step(state, action, rng)
            child = SearchNode(state, node, action)
            node.children[action] = child
            record.visited.add(state.player)
            node = child
            break
        node = select_child(node, c, rng)
        state = world.step(state, node.action, rng)
        node.state = state
        record.visited.add(state.player)


    depth = 0
    step, legal = world.step, world.legal_actions
    while not state.terminal and (rollout_depth is None or depth < rollout_depth):
        actions = legal(state)
        state = step(state, actions[rng.randrange(len(actions))], rng)
        depth += 1
    if state.failure is not None:
        record.failures[state.failure] += 1
    value = world.search_value(state, root.state)

    while node is not None:
        node.visits += 1
        node.total += value
        node = node.parent
    return root


def most_visited(root: SearchNode, rng: random.Random) -> str:
    top = max(ch.visits for ch in root.children.values())
    best = [a for a, ch in root.children.items() if ch.visits == top]
    return best[0] if len(best) == 1 else best[rng.randrange(len(best))]


_cache: dict[tuple, PlaythroughRecord] = {}
_CACHE_LIMIT = 4096


def _cache_key(world: World, budget: SearchBudget, depth: int | None, seed: int) -> tuple:
    # t, s and e do not influence a playthrough, so kits differing only there share entries
    kit = replace(world.kit, t=1, s=1, e=0.0)
    return (type(world).__name__, world.level.rows, world.level.alphabet.tokens,
            kit, depth, getattr(world, "rules", None),
            budget.iterations_per_move, budget.max_moves, seed)


def run_playthrough(world: World, budget: SearchBudget, seed: int) -> PlaythroughRecord:
    """Play the level by committing the most-visited root action after each search.

    A fresh tree is grown for every committed move.  ``success`` is False when
    the player dies or ``budget.max_moves`` runs out.
    """
    depth = budget.rollout_depth if budget.rollout_depth is not None else world.kit.rollout_depth
    key = _cache_key(world, budget, depth, seed)
    if key in _cache:
        return _cache[key].copy()

    rng = random.Random(seed)
    state = world.initial_state()
    record = PlaythroughRecord(visited={state.player}, path=[state.player])
    for _ in range(budget.max_moves):
        if state.terminal:
            break
        root = SearchNode(state)
        for _ in range(budget.iterations_per_move):
            mcts_iteration(root, world.kit.c, depth, rng, record)
        state = world.step(state, most_visited(root, rng), rng)
        record.visited.add(state.player)
        record.path.append(state.player)
        if state.failure is not None:
            record.failures[state.failure] += 1
    record.success = state.won and state.failure is None

    if len(_cache) >= _CACHE_LIMIT:
        _cache.clear()
    _cache[key] = record.copy()
    return record


def collect_records(world: World, t: int, budget: SearchBudget, base_seed: int) -> PlaythroughRecord:
    """Merge ``t`` playthroughs seeded ``base_seed .. base_seed + t - 1``.

    A failed playthrough is retried with up to ``RETRIES`` fresh seeds; the
    last attempt is merged regardless of its outcome.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    merged: PlaythroughRecord | None = None
    for i in range(t):
        seed = base_seed + i
        rec = run_playthrough(world, budget, seed)
        for k in range(1, RETRIES + 1):
            if rec.success:
                break
            rec = run_playthrough(world, budget, retry_seed(seed, k))
        merged = rec if merged is None else merged.merge(rec)
    assert merged is not None
    return merged


def retry_seed(seed: int, attempt: int) -> int:
    return seed + 1_000_003 * attempt


__all__ = [
    "NoGoalCells",
    "PlaythroughRecord",
    "SearchNode",
    "UnvisitedNode",
    "collect_records",
    "mcts_iteration",
    "run_playthrough",
    "select_child",
    "uct_value",
]
