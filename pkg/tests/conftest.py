import contextlib
import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def criterion():
    """Context manager that times an acceptance criterion and records one
    PASS/FAIL line for the terminal summary."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        t0 = time.perf_counter()
        details: list = []
        try:
            yield details
        except BaseException as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            line = f"FAIL  criterion {number:2d}: {title} ({time.perf_counter() - t0:.1f} s) -- {reason[:160]}"
            ACCEPTANCE_LINES.append(line)
            raise
        extra = f" [{'; '.join(details)}]" if details else ""
        line = f"PASS  criterion {number:2d}: {title} ({time.perf_counter() - t0:.1f} s){extra}"
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
