import numpy as np
import pytest

from pilotfair.dataset import Dataset


def make_dataset(X, y):
    """Dataset from a partial feature matrix; missing columns are zero-filled, sex stays column 0."""
    X = np.asarray(X, dtype=float)
    full = np.zeros((len(X), 10))
    full[:, : X.shape[1]] = X
    return Dataset(full, np.asarray(y))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.split("::")[-1]
            if rep.when == "call" and name.startswith("test_acceptance_"):
                lines.append(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name[16:]}")
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: s[6:]):
            terminalreporter.write_line(line)
