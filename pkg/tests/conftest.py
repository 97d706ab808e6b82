import pytest

from lifeloop import dsl
from lifeloop.engine import Engine, EngineConfig


@pytest.fixture(scope="session")
def canonical_graph():
    return dsl.canonical_graph()


@pytest.fixture(scope="session")
def canonical_engine(canonical_graph):
    return Engine(canonical_graph, EngineConfig())
