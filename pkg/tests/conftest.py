from pathlib import Path

import pytest

from pcfpkit.frontend import parse_model, parse_property

FIXTURES = Path(__file__).parent / "fixtures"
COIN_PROP = "P=? [ F x>=N & !f ]"


def load_coin(n=6):
    text = (FIXTURES / "coin.pm").read_text()
    return parse_model(text, None if n is None else {"N": n})


@pytest.fixture
def coin():
    return load_coin(6)


@pytest.fixture
def coin_goal(coin):
    return parse_property(COIN_PROP, coin)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# acceptance reporting: one line per criterion in the terminal summary
ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
