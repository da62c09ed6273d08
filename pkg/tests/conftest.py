import pytest

from insider_hedge import ModelParams


@pytest.fixture()
def params() -> ModelParams:
    """Market used throughout: the one behind the published tables."""
    return ModelParams(mu=0.08, sigma=0.25, s0=100.0, strike=110.0, t_expiry=0.25, delta=0.02)
