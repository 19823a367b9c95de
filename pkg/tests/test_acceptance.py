"""End-to-end acceptance criteria 1-10.

Each test records a one-line verdict that is printed in the terminal summary
(see ``conftest.py``).  Run alone with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import filecmp
import itertools
import math
import random
import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import pytest

from trp import mcts
from trp.cli import ExperimentConfig, cmd_experiment, resolve
from trp.game import FailureEvent
from trp.level import BinarySketch, Level, strip_threats
from trp.mcts import PlaythroughRecord, SearchNode, run_playthrough, uct_value
from trp.metrics import plagiarism, playability_dungeon
from trp.pipeline import (
    binary_similarity,
    generate,
    partition_sketch,
    place_threats,
    rank_threats,
)

from .test_metrics import dungeon_oracle
from .test_pipeline import assert_tiling, occurs_in

RESULTS: dict[int, tuple[bool, str]] = {}
POPULATION = 50


def verdict(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def experiments(tmp_path_factory):
    """TRP-Fixed, TRP-Variety and Markov populations of 50 per domain, identical seeds."""
    out = tmp_path_factory.mktemp("experiments")
    rows, setups = {}, {}
    start = time.perf_counter()
    for domain in ("dungeon", "platformer"):
        setup = resolve(ExperimentConfig(domain=domain, population=POPULATION, base_seed=0))
        setups[domain] = setup
        rows[domain] = dict(cmd_experiment(setup, out / domain))
    return rows, setups, time.perf_counter() - start


def test_criterion_1_formula_oracles():
    rng = random.Random(1)
    start = time.perf_counter()
    sim_ok = True
    for _ in range(1000):
        w, h = rng.randint(1, 16), rng.randint(1, 16)
        a = tuple(rng.randint(0, 1) for _ in range(w * h))
        b = tuple(rng.randint(0, 1) for _ in range(w * h))
        brute = sum(1 for x, y in zip(a, b) if x == y)
        sim_ok &= binary_similarity(BinarySketch(w, h, a), BinarySketch(w, h, b)) == brute
    worst = 0.0
    for _ in range(100):
        big_n = rng.randint(1, 10_000)
        n = rng.randint(1, big_n)
        v, c = rng.uniform(-1, 1), rng.uniform(0, 2)
        parent = SearchNode.__new__(SearchNode)
        parent.visits, parent.parent = big_n, None
        node = SearchNode.__new__(SearchNode)
        node.visits, node.total, node.parent = n, v * n, parent
        worst = max(worst, abs(uct_value(node, c) - (v + c * math.sqrt(math.log(big_n) / n))))
    elapsed = time.perf_counter() - start
    verdict(1, sim_ok and worst <= 1e-12 and elapsed < 1.0,
            f"similarity exact={sim_ok}, uct max error {worst:.1e}, {elapsed:.2f}s")


def test_criterion_2_tiling():
    rng = random.Random(2)
    start = time.perf_counter()
    for _ in range(500):
        w, h, s = rng.randint(1, 64), rng.randint(1, 64), rng.randint(1, 16)
        assert_tiling(partition_sketch(w, h, s, rng), w, h, s)
    elapsed = time.perf_counter() - start
    verdict(2, elapsed < 5.0, f"500 partitions tile exactly, {elapsed:.2f}s")


def test_criterion_3_provenance(experiments):
    # playthroughs are shared with the criterion 7 populations; the bound covers sketch, fill and audit
    _, setups, _ = experiments
    start = time.perf_counter()
    audited = 0
    for domain, setup in setups.items():
        src, kit = setup.sources[0], setup.kit
        stripped = strip_threats(src, kit.threats)
        for seed in range(20):
            gen = generate(src, kit, setup.budget, seed, setup.domain.world, setup.domain.required.values())
            for seg, patch in zip(gen.trace.segments, gen.trace.patches):
                assert occurs_in(patch, stripped), (domain, seed, seg)
                assert gen.filled.window(seg.col, seg.row, seg.width, seg.height) == patch
                audited += 1
    elapsed = time.perf_counter() - start
    verdict(3, elapsed < 30.0, f"{audited} patches across 40 levels occur verbatim in the source, {elapsed:.1f}s")


def test_criterion_4_threat_dial(experiments):
    _, setups, _ = experiments
    setup = setups["dungeon"]
    src, kit, dom = setup.sources[0], setup.kit.with_params(1, 2, 0.0), setup.domain
    counts = [generate(src, kit, setup.budget, seed, dom.world, dom.required.values()).level.count(kit.threats)
              for seed in range(POPULATION)]
    gen = generate(src, setup.kit, setup.budget, 0, dom.world, dom.required.values())
    placed = [place_threats(gen.filled, gen.ranked, e).count(kit.threats) for e in (0, 0.25, 0.375, 0.5)]
    monotone = placed == sorted(placed)
    verdict(4, sum(counts) == 0 and monotone,
            f"e=0 threat tokens over {POPULATION} levels: {sum(counts)}; placed by e: {placed}")


def test_criterion_5_relevance():
    rng = random.Random(5)
    worst = 0.0
    for _ in range(200):
        failures = Counter()
        for _ in range(rng.randint(1, 60)):
            failures[FailureEvent((rng.randrange(20), rng.randrange(16)), rng.choice("123Ep"))] += 1
        ranked = rank_threats(PlaythroughRecord(set(), failures))
        worst = max(worst, abs(sum(c.relevance for c in ranked) - 1.0))
    verdict(5, worst <= 1e-9, f"max |sum - 1| over 200 records {worst:.1e}")


def test_criterion_6_agent_competence(dungeon, platformer, dungeon_level1, platformer_level1):
    lines, ok = [], True
    for dom, lvl, need in ((dungeon, dungeon_level1, 18), (platformer, platformer_level1, 16)):
        world = dom.world(lvl, dom.kit)
        wins, slowest = 0, 0.0
        for seed in range(20):
            mcts._cache.clear()
            start = time.perf_counter()
            wins += run_playthrough(world, dom.budget, seed).success
            slowest = max(slowest, time.perf_counter() - start)
        ok &= wins >= need and slowest < 10.0
        lines.append(f"{dom.name} {wins}/20 (need {need}), slowest {slowest:.1f}s")
    verdict(6, ok, "; ".join(lines))


def test_criterion_7_playability_trend(experiments):
    rows, _, elapsed = experiments
    ok, parts = elapsed < 900, []
    for domain, arms in rows.items():
        fixed, markov = arms["trp-fixed"].playable, arms["markov"].playable
        ok &= fixed >= 0.80 and fixed > markov
        parts.append(f"{domain} fixed {fixed:.2f} vs markov {markov:.2f}")
    verdict(7, ok, "; ".join(parts) + f"; {elapsed / 60:.1f} min")


def test_criterion_8_variety_self_similarity(experiments):
    rows, _, _ = experiments
    ok, parts = True, []
    for domain, arms in rows.items():
        fixed, variety = arms["trp-fixed"].selfsim_mean, arms["trp-variety"].selfsim_mean
        ok &= variety <= fixed
        parts.append(f"{domain} variety {variety:.2f} vs fixed {fixed:.2f}")
    verdict(8, ok, "; ".join(parts))


def test_criterion_9_metric_identities(dungeon, dungeon_level1):
    identity = plagiarism(dungeon_level1, dungeon_level1) == 100.0
    rng = random.Random(9)
    symmetric = True
    for _ in range(500):
        w, h = rng.randint(1, 20), rng.randint(1, 20)
        a = Level(tuple("".join(rng.choice(".w+g") for _ in range(w)) for _ in range(h)), dungeon.alphabet)
        b = Level(tuple("".join(rng.choice(".w+g") for _ in range(w)) for _ in range(h)), dungeon.alphabet)
        symmetric &= plagiarism(a, b) == plagiarism(b, a)
    checked = agree = 0
    for width, height in itertools.product(range(1, 7), repeat=2):
        if width * height > 6:
            continue
        for cells in itertools.product(".wA+g", repeat=width * height):
            if len(set(cells) - {"."}) > 3:
                continue
            rows = tuple("".join(cells[r * width:(r + 1) * width]) for r in range(height))
            checked += 1
            agree += playability_dungeon(Level(rows, dungeon.alphabet)) == dungeon_oracle(rows)
    verdict(9, identity and symmetric and agree == checked,
            f"identity={identity}, symmetry={symmetric}, flood fill agrees on {agree}/{checked} enumerated grids")


def test_criterion_10_determinism(tmp_path):
    def experiment(out: Path) -> None:
        for domain in ("dungeon", "platformer"):
            subprocess.run(
                [sys.executable, "-m", "trp", "experiment", "--domain", domain, "-n", "4", "--seed", "11",
                 "--iterations", "40", "--max-moves", "80", "--out", str(out / domain)],
                check=True, capture_output=True)

    experiment(tmp_path / "a")
    experiment(tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*")
                   if p.is_file() and p.suffix in (".lvl", ".csv"))
    same = [filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in files]
    verdict(10, bool(files) and all(same), f"{sum(same)}/{len(files)} level and CSV files byte-identical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
