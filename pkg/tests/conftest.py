import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracsing.geometry import Domain, default_basis  # noqa: E402

#: criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def interval_basis():
    return default_basis(Domain.interval(), 256)


@pytest.fixture(scope="session")
def small_basis():
    return default_basis(Domain.interval(), 64)


@pytest.fixture(scope="session")
def square_basis():
    return default_basis(Domain.rectangle(), 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
