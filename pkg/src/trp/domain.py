"""Domain definitions loaded from JSON: alphabet, rules, knowledge kit and fixtures."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .dungeon import DungeonRules, DungeonWorld
from .game import World
from .kit import KnowledgeKit, ParamRanges, SearchBudget, kit_from_json
from .level import Level, TokenAlphabet, load_level, preprocess_pits
from .platformer import PlatformerRules, PlatformerWorld

DATA_DIR = Path(str(resources.files("trp") / "data"))
BUILTIN = ("dungeon", "platformer")


@dataclass(frozen=True)
class Domain:
    name: str
    kind: str
    alphabet: TokenAlphabet
    kit: KnowledgeKit
    ranges: ParamRanges
    budget: SearchBudget
    rules: DungeonRules | PlatformerRules
    required: Mapping[str, str]
    pits: bool = False
    population: int = 50
    level_paths: Mapping[str, Path] = field(default_factory=dict)

    def world(self, level: Level, kit: KnowledgeKit | None = None) -> World:
        kit = kit or self.kit
        if self.kind == "dungeon":
            return DungeonWorld(level, kit, self.rules)
        return PlatformerWorld(level, kit, self.rules)

    def prepare(self, level: Level) -> Level:
        """Domain pre-processing applied to every source level before use."""
        return preprocess_pits(level) if self.pits else level

    def load_level(self, name_or_path: str | Path) -> Level:
        path = self.level_paths.get(str(name_or_path), Path(name_or_path))
        return self.prepare(load_level(path, self.alphabet))


def domain_from_json(data: Mapping[str, Any], base: Path) -> Domain:
    alphabet = TokenAlphabet.load(base / data["alphabet"])
    kind = data["kind"]
    rules_data = data.get("rules", {})
    if kind == "dungeon":
        rules: DungeonRules | PlatformerRules = DungeonRules(
            tuple((k, int(v)) for k, v in rules_data.get("enemy_periods", {"1": 1, "2": 2, "3": 3}).items())
        )
    elif kind == "platformer":
        rules = PlatformerRules(**rules_data)
    else:
        raise ValueError(f"unknown domain kind {kind!r}")
    kit = kit_from_json(data)
    for t in kit.threats:
        if t not in alphabet or "threat" not in alphabet[t].categories:
            raise ValueError(f"threat token {t!r} is not threat-categorised in the alphabet")
    b = data.get("budget", {})
    budget = SearchBudget(int(b.get("iterations_per_move", 200)), int(b.get("max_moves", 500)))
    return Domain(
        name=data.get("name", kind),
        kind=kind,
        alphabet=alphabet,
        kit=kit,
        ranges=ParamRanges.from_json(data["variety"]) if "variety" in data else ParamRanges.singleton(kit),
        budget=budget,
        rules=rules,
        required=dict(data.get("required", {})),
        pits=bool(data.get("preprocess_pits", False)),
        population=int(data.get("population", 50)),
        level_paths={k: base / v for k, v in data.get("levels", {}).items()},
    )


def load_domain(name_or_path: str | Path) -> Domain:
    """Load a built-in domain by name or a domain JSON file by path."""
    if str(name_or_path) in BUILTIN:
        path = DATA_DIR / f"{name_or_path}.json"
    else:
        path = Path(name_or_path)
    return domain_from_json(json.loads(path.read_text()), path.parent)
