"""Shared fixtures: the default synthetic year and a completed fast scan.

Session-scoped because several modules (and half the acceptance criteria)
reuse the same default-year artifacts; rebuilding them per test would
dominate the suite's runtime.
"""

import numpy as np
import pytest

import gridscan as gs


@pytest.fixture(scope="session")
def year():
    return gs.generate_synthetic_year(gs.SyntheticYearConfig(seed=1))


@pytest.fixture(scope="session")
def year_oracle(year):
    return gs.DampingSurrogate.from_seed(year.metadata["informative_indices"], seed=101)


@pytest.fixture(scope="session")
def year_weights(year, year_oracle):
    report = gs.select_features(year, year_oracle, seed=0)
    return report.distance_weights()


@pytest.fixture(scope="session")
def default_scan(year, year_oracle):
    report = gs.fast_scan(year, year_oracle)
    return gs.validate(report, year, year_oracle, 500, seed=7)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
