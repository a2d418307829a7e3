import pytest

from dbra.groups import group_setup


@pytest.fixture(scope="session")
def ctx():
    return group_setup(128, seed=b"tests/shared-context")


@pytest.fixture(scope="session")
def ctx192():
    return group_setup(192, seed=b"tests/shared-context-192")
