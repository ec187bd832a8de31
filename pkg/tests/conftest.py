from __future__ import annotations

from pathlib import Path

import pytest

from vqmps.oracle import fixture_key, load_fixtures

FIXTURES = Path(__file__).parent / "fixtures" / "oracle_energies.json"

# filled by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def oracle_values():
    data = load_fixtures(FIXTURES)
    if not data:
        pytest.fail(f"missing oracle fixtures at {FIXTURES}; run tests/make_fixtures.py")

    def lookup(model, N, delta, chi=None, seed=None, J=1.0, h=0.0):
        return data[fixture_key(model, N, delta, J, h, chi, seed)]

    return lookup


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
