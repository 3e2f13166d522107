import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "src", "multicg", "fixtures")


@pytest.fixture
def fixture_dir():
    return os.path.abspath(FIXTURE_DIR)


@pytest.fixture
def fixture_config(fixture_dir):
    return os.path.join(fixture_dir, "fixture.ini")


def random_views(rng, n=20, m=6):
    """Symmetric views with unit diagonal and entries uniform on [-1, 1]."""
    out = []
    for _ in range(m):
        a = rng.uniform(-1, 1, (n, n))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 1.0)
        out.append(a)
    return np.stack(out)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
