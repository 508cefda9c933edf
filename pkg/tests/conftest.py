import json
import pathlib

import numpy as np
import pytest

from waxman import _backend

DATA = pathlib.Path(__file__).parent / "data"

# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def suites():
    return json.loads((DATA / "oracle_suites.json").read_text())


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    previous = _backend.use(request.param)
    yield request.param
    _backend.use(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def as_complex(pairs):
    return np.array([complex(re, im) for re, im in pairs])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
