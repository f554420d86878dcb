import numpy as np
import pytest

from walkerstage.features import build_matrix
from walkerstage.ingest import StageLabel
from walkerstage.synthgen import default_profile, generate_cohort, generate_session

SMALL_COUNTS = {lab: 4 for lab in StageLabel}


@pytest.fixture(scope="session")
def hy2_session():
    session, truth = generate_session(default_profile(StageLabel.HY2), seed=11, subject_id="T01")
    return session, truth


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    manifest, truths = generate_cohort(out, SMALL_COUNTS, seed=5)
    return manifest, truths


@pytest.fixture(scope="session")
def small_matrix(small_cohort):
    return build_matrix(small_cohort[0])


def separable_data(rng, n=60, d=6, classes=3):
    """Clustered data whose first column alone separates the classes."""
    y = np.arange(n) % classes
    X = rng.normal(size=(n, d))
    X[:, 0] = 10.0 * y + rng.uniform(0, 1, n)
    return X, y


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
