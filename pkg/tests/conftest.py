import numpy as np
import pytest

from shadowgb.data import Dataset


def make_ds(points, labels, class_count=None, normalized=False):
    labels = np.asarray(labels)
    k = class_count if class_count is not None else int(labels.max()) + 1
    return Dataset(np.asarray(points, dtype=float), labels, k, normalized=normalized)


def random_ds(rng, n, d=2, k=2, normalized=True):
    X = rng.uniform(size=(n, d))
    y = rng.integers(0, k, n)
    return Dataset(X, y, k, normalized=normalized)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``acceptance(k, ok, detail)`` records one criterion line and asserts it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
