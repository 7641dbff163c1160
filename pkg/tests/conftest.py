import numpy as np
import pytest

from pstraj import config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def two_link_docs():
    return config.template("two-link")


@pytest.fixture(scope="session")
def two_link(two_link_docs):
    return config.parse_robot(two_link_docs["robot"])


@pytest.fixture(scope="session")
def six_axis():
    return config.parse_robot(config.template("six-axis")["robot"])
