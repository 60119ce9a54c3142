import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cbrdynamics import load_game  # noqa: E402

GAMES = Path(__file__).resolve().parent.parent / "games"

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def game_file(name):
    return GAMES / f"{name}.yaml"


@pytest.fixture(scope="session")
def games_dir():
    return GAMES


@pytest.fixture(scope="session")
def pd():
    return load_game(game_file("prisoners_dilemma"))


@pytest.fixture(scope="session")
def sne_cycle():
    return load_game(game_file("sne_cycle"))


@pytest.fixture(scope="session")
def sne_cycle_weak():
    return load_game(game_file("sne_cycle_weak"))


@pytest.fixture(scope="session")
def coord3():
    return load_game(game_file("coordination3x3"))


@pytest.fixture(scope="session")
def stag():
    return load_game(game_file("stag_hunt"))


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
