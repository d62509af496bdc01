import os
import sys
from pathlib import Path

import numpy as np
import pytest

from rank_mctp.data import Dataset, ingest_long_csv

FIXTURES = Path(__file__).parent / "fixtures"
SHOULDER_ENV = "RANK_MCTP_SHOULDER_CSV"


def random_dataset(rng, a, d, n, ties=False, levels=4):
    """Random complete design; with ``ties`` values come from a small integer grid."""
    if np.isscalar(n):
        n = [n] * a
    groups = []
    for ni in n:
        if ties:
            groups.append(rng.integers(0, levels, size=(ni, d)).astype(float))
        else:
            groups.append(rng.normal(size=(ni, d)))
    return Dataset.from_arrays(groups)


def shoulder_path():
    env = os.environ.get(SHOULDER_ENV)
    if env:
        return Path(env)
    return FIXTURES / "shoulder_long.csv"


def load_shoulder():
    """Shoulder-pain study in long format (subject, group, time, value).

    The fixture is not bundled; see scripts/shoulder_from_nparld.py.
    """
    path = shoulder_path()
    if not path.is_file():
        pytest.fail(
            f"shoulder fixture not found at {path}; export it with scripts/shoulder_from_nparld.py "
            f"or point {SHOULDER_ENV} at a long-format CSV"
        )
    with open(path, newline="") as fh:
        return ingest_long_csv(fh, group_order=["Y", "N"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
