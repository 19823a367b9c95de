from __future__ import annotations

import sys

import pytest
from hypothesis import settings

from trp.domain import load_domain
from trp.level import TokenAlphabet, parse_level

settings.register_profile("trp", max_examples=60, deadline=None)
settings.load_profile("trp")


@pytest.fixture(scope="session")
def dungeon():
    return load_domain("dungeon")


@pytest.fixture(scope="session")
def platformer():
    return load_domain("platformer")


@pytest.fixture(scope="session")
def dungeon_level1(dungeon):
    return dungeon.load_level("level1")


@pytest.fixture(scope="session")
def platformer_level1(platformer):
    return platformer.load_level("level1")


@pytest.fixture(scope="session")
def tiny_alphabet():
    return TokenAlphabet.from_mapping({"-": ["empty"], "X": ["solid"], "E": ["threat"], "p": ["threat", "pit"]})


def grid(text: str, alphabet):
    return parse_level(text.strip("\n"), alphabet)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
