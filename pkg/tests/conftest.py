import pytest

from contlogic.structures import make_interval_structure, make_lower_bound_structure, sample_family


@pytest.fixture(scope="session")
def family():
    return sample_family()


@pytest.fixture(scope="session")
def discrete(family):
    return make_lower_bound_structure(family)


@pytest.fixture(scope="session")
def interval():
    return make_interval_structure()
