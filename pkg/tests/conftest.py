import json
from pathlib import Path

import pytest
from hypothesis import settings

# property tests draw a fixed example sequence so every run checks the same cases
settings.register_profile("fixed", derandomize=True)
settings.load_profile("fixed")

GOLDEN = json.loads((Path(__file__).with_name("golden.json")).read_text())


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


def golden_value(quantity, lam):
    return GOLDEN["lambda"][repr(float(lam))][quantity]["value"]


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
