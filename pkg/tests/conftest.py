import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from seamforge import synthetic

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def cube():
    return synthetic.cube()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line per acceptance criterion, with a runtime budget."""

    @contextmanager
    def check(number: int, title: str, budget: float):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            within = elapsed < budget
            status = "PASS" if ok and within else "FAIL"
            line = f"{status} criterion {number}: {title} ({elapsed:.2f}s, budget {budget:g}s)"
            ACCEPTANCE.append(line)
            print(line)
        assert within, f"criterion {number} took {elapsed:.2f}s, budget {budget:g}s"

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
