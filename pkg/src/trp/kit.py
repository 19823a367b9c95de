"""Designer-authored knowledge kits: goals, failures, threats and generation parameters."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

GOAL_KINDS = ("reach", "holds", "column")


@dataclass(frozen=True)
class GoalPredicate:
    """One step of the goal sequence.

    ``reach``: the player stands on a cell holding ``token``.
    ``holds``: the player's inventory contains ``token``.
    ``column``: the player shares a column with a cell holding ``token``.
    """

    kind: str
    token: str

    def __post_init__(self) -> None:
        if self.kind not in GOAL_KINDS:
            raise ValueError(f"unknown goal kind {self.kind!r}")

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> GoalPredicate:
        ((kind, token),) = data.items()
        return cls(kind, token)

    def to_json(self) -> dict[str, str]:
        return {self.kind: self.token}


@dataclass(frozen=True)
class FailureSpec:
    threat_contact: bool = True
    below_screen: bool = False


@dataclass(frozen=True)
class KnowledgeKit:
    goals: tuple[GoalPredicate, ...]
    failures: FailureSpec
    threats: frozenset[str]
    c: float = 0.25
    rollout_depth: int | None = None
    t: int = 1
    s: int = 2
    e: float = 0.25
    # reward per cell of progress relative to the search root; 0 backs up the raw state value
    progress_gain: float = 0.0

    def __post_init__(self) -> None:
        if not self.goals:
            raise ValueError("goal sequence must not be empty")
        if self.c < 0:
            raise ValueError("exploration constant must be >= 0")
        if self.rollout_depth is not None and self.rollout_depth < 1:
            raise ValueError("rollout depth must be >= 1 or None")
        if self.t < 1 or self.s < 1:
            raise ValueError("t and s must be >= 1")
        if not 0.0 <= self.e <= 1.0:
            raise ValueError("e must lie in [0, 1]")
        if self.progress_gain < 0:
            raise ValueError("progress gain must be >= 0")

    def with_params(self, t: int, s: int, e: float) -> KnowledgeKit:
        return replace(self, t=t, s=s, e=e)


@dataclass(frozen=True)
class ParamRanges:
    t: tuple[int, ...]
    s: tuple[int, ...]
    e: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (self.t and self.s and self.e):
            raise ValueError("every parameter range needs at least one choice")
        if min(self.t) < 1 or min(self.s) < 1:
            raise ValueError("t and s choices must be >= 1")
        if not all(0.0 <= e <= 1.0 for e in self.e):
            raise ValueError("e choices must lie in [0, 1]")

    @classmethod
    def from_json(cls, data: Mapping[str, Sequence[Any]]) -> ParamRanges:
        return cls(tuple(int(v) for v in data["t"]), tuple(int(v) for v in data["s"]),
                   tuple(float(v) for v in data["e"]))

    @classmethod
    def singleton(cls, kit: KnowledgeKit) -> ParamRanges:
        return cls((kit.t,), (kit.s,), (kit.e,))


def sample_params(ranges: ParamRanges, rng: random.Random) -> tuple[int, int, float]:
    """Independent uniform draws of ``(t, s, e)`` from the choice sets."""
    return rng.choice(ranges.t), rng.choice(ranges.s), rng.choice(ranges.e)


def kit_from_json(data: Mapping[str, Any], fixed: Mapping[str, Any] | None = None) -> KnowledgeKit:
    mcts = data.get("mcts", {})
    fixed = fixed if fixed is not None else data.get("fixed", {})
    fail = data.get("failures", {})
    return KnowledgeKit(
        goals=tuple(GoalPredicate.from_json(g) for g in data["goals"]),
        failures=FailureSpec(bool(fail.get("threat_contact", True)), bool(fail.get("below_screen", False))),
        threats=frozenset(data["threats"]),
        c=float(mcts.get("c", 0.25)),
        rollout_depth=mcts.get("rollout_depth"),
        t=int(fixed.get("t", 1)),
        s=int(fixed.get("s", 2)),
        e=float(fixed.get("e", 0.25)),
        progress_gain=float(mcts.get("progress_gain", 0.0)),
    )


@dataclass(frozen=True)
class SearchBudget:
    iterations_per_move: int = 200
    max_moves: int = 500
    rollout_depth: int | None = field(default=None)

    def __post_init__(self) -> None:
        if self.iterations_per_move < 1 or self.max_moves < 1:
            raise ValueError("budget values must be positive")
        if self.rollout_depth is not None and self.rollout_depth < 1:
            raise ValueError("rollout depth must be >= 1 or None")
