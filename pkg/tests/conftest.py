import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gpudissect.backend import ExecutionPolicy, ReplayBackend, load_fixture

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def gb203():
    return ReplayBackend(load_fixture("gb203"))


@pytest.fixture(scope="session")
def gh100():
    return ReplayBackend(load_fixture("gh100"))


@pytest.fixture()
def policy():
    return ExecutionPolicy(repetitions=17, warmup_discards=1, seed=11)


def sass_text(name: str) -> str:
    return (DATA_DIR / "sass" / name).read_text(encoding="utf-8")
