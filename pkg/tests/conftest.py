from __future__ import annotations

import numpy as np
import pytest

from fracwell.functionals import ProblemParams
from fracwell.grid import Domain1D, MagneticField
from fracwell.nfunc import Power, PowerSum


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def power2_problem():
    P = ProblemParams(0.5, 3.0, Domain1D(-1.0, 1.0, 32), Power(2.0))
    return P, P.kernel()


@pytest.fixture(scope="session")
def magnetic_problem():
    P = ProblemParams(0.4, 3.0, Domain1D(-1.0, 1.0, 24), PowerSum(2.0, 3.0), MagneticField("linear", 1.3))
    return P, P.kernel()


_ACCEPTANCE: list[str] = []


@pytest.fixture
def accept():
    """Record one pass/fail line per acceptance criterion and assert it."""

    def record(number: int, name: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
