import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyperkl.constructors import (catalog_group, catalog_hypergroups,  # noqa: E402
                                  conjugacy_hypergroup, group_as_hypergroup)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def catalog():
    return catalog_hypergroups()


@pytest.fixture(scope="session")
def S3():
    return catalog_group("S3")


@pytest.fixture(scope="session")
def S3_conj(S3):
    return conjugacy_hypergroup(S3)


@pytest.fixture(scope="session")
def Z3():
    return group_as_hypergroup(catalog_group("Z3"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
