import functools
import sys
import os

import numpy as np
import pytest

from repval.games import Game, game_from_json, load_json

CORPUS = os.path.join(os.path.dirname(__file__), "..", "src", "repval", "corpus")


def corpus_games():
    names = sorted(f[:-5] for f in os.listdir(CORPUS) if f.endswith(".json"))
    return {n: game_from_json(load_json(os.path.join(CORPUS, n + ".json"))) for n in names}


def make_chsh(mu=None) -> Game:
    mu = mu or [np.ones(2) / 2, np.ones(2) / 2]
    return Game.from_function((2, 2), (2, 2), mu, lambda x, a: (a[0] ^ a[1]) == (x[0] & x[1]), "chsh")


@functools.lru_cache(maxsize=None)
def chsh_seesaw():
    from repval.values import seesaw_lower_bound
    return seesaw_lower_bound(make_chsh(), (2, 2), restarts=5, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chsh():
    return make_chsh()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[n])
