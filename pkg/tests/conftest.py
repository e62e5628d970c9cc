import numpy as np
import pytest

from arsk.simgen import SimConfig, gen_dataset

ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def clean_dataset():
    return gen_dataset(SimConfig(pi=0.0, seed=11))


@pytest.fixture(scope="session")
def contaminated_dataset():
    return gen_dataset(SimConfig(pi=0.1, seed=12))


def blobs(rng, centers, n_each, scale=0.3):
    """Gaussian blobs around the given centers with 1-based labels."""
    centers = np.asarray(centers, dtype=float)
    X = np.vstack([c + scale * rng.standard_normal((n_each, centers.shape[1])) for c in centers])
    labels = np.repeat(np.arange(1, len(centers) + 1), n_each)
    return X, labels
