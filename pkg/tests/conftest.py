import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=40)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def table():
    from p1poles.ode import default_table

    return default_table()


@pytest.fixture(scope="session")
def grids():
    from p1poles.predictor import default_grids

    return default_grids()


@pytest.fixture(scope="session")
def basis(grids):
    return grids.basis
