from __future__ import annotations

import pytest

from pqslln import tailmodel as tm


@pytest.fixture(scope="session")
def ex41():
    return tm.ex4_1()


@pytest.fixture(scope="session")
def ex42():
    return tm.ex4_2()


@pytest.fixture(scope="session")
def ex43():
    return tm.ex4_3()


@pytest.fixture(scope="session")
def corpus(ex41, ex42, ex43):
    """Every built-in law, one representative parameter set each."""
    return {
        "ex4_1": ex41,
        "ex4_2": ex42,
        "ex4_3": ex43,
        "pareto_centered": tm.pareto(tm.as_fraction("3/2"), centered=True),
        "pareto": tm.pareto(tm.as_fraction("5/2")),
        "logpower": tm.logpower("3/2", 1, 3),
        "rademacher": tm.rademacher(),
        "zero": tm.zero(),
    }
