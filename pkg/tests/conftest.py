import json
import sys
from pathlib import Path

import pytest

from bikeshare_cqn.config import load_config
from bikeshare_cqn.model import validate_model

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

sys.path.insert(0, str(Path(__file__).parent))


def fixture_path(name):
    return FIXTURES / f"{name}.json"


def load_model(name):
    return validate_model(load_config(fixture_path(name)).model)


def two_station(lam1=(5, 7), lam2=(5, 5), C=2, K=3, mu=(2, 3), xi=(4, 5)):
    return validate_model({
        "N": 2, "C": C, "K": K,
        "stations": [{"lambda": list(lam1)}, {"lambda": list(lam2)}],
        "roads": [
            {"from": 1, "to": 2, "mu": mu[0], "xi": xi[0]},
            {"from": 2, "to": 1, "mu": mu[1], "xi": xi[1]},
        ],
        "p": {"1->2": 1, "2->1": 1},
        "alpha": {"1->2": 1, "2->1": 1},
    })


def symmetric_ring(N=3, C=2, K=3, lam=(4, 6), mu=2.0, xi=3.0):
    roads = [{"from": i, "to": i % N + 1, "mu": mu, "xi": xi} for i in range(1, N + 1)]
    keys = {f"{i}->{i % N + 1}": 1 for i in range(1, N + 1)}
    return validate_model({
        "N": N, "C": C, "K": K,
        "stations": [{"lambda": list(lam)}] * N,
        "roads": roads,
        "p": keys,
        "alpha": dict(keys),
    })


@pytest.fixture(scope="session")
def expected():
    return json.loads((FIXTURES / "expected.json").read_text())


@pytest.fixture(scope="session")
def golden_models():
    names = ["example_one", "example_two", "example_three"] + [f"example_four_lambda{k}" for k in range(5, 10)]
    return {name: load_model(name) for name in names}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
