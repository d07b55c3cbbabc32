import numpy as np
import pytest

from observability.langfuse_config import reset_client


@pytest.fixture(autouse=True)
def no_tracing(monkeypatch):
    monkeypatch.setenv("SPECTRO_TRACING", "0")
    reset_client()
    yield
    reset_client()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
