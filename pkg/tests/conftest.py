import pytest

from logquest.engine import Engine, PipelineConfig


@pytest.fixture(scope="session")
def engine() -> Engine:
    """One engine over the bundled assets, shared by the whole run; ask() is
    stateless so sharing is safe."""
    return Engine(PipelineConfig())
