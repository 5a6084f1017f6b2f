"""
Test configuration and fixtures for the allocation library tests.
"""
import os

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

# Set up test environment variables before importing the app
os.environ.setdefault("MERTON_LOG_LEVEL", "WARNING")
os.environ.setdefault("MERTON_DATA_DIR", "data")

from src.main import app
from src.models.estimation_schemas import PriceSeries
from src.models.market_schemas import Horizon, MarketParams
from src.models.simulation_schemas import SimConfig
from src.services.estimation import price_series_to_csv


@pytest.fixture
def client() -> TestClient:
    """Test client for FastAPI app."""
    return TestClient(app)


@pytest.fixture
def runner() -> CliRunner:
    """Click runner for the command-line interface."""
    return CliRunner()


@pytest.fixture
def market() -> MarketParams:
    """Bombardier estimates with the intensity behind the published tables."""
    return MarketParams(mu=BOMB_MU, sigma=BOMB_SIGMA, r=BOMB_R, lam=BOMB_LAMBDA)


@pytest.fixture
def default_free_market(market) -> MarketParams:
    """Same market without default risk."""
    return market.with_intensity(0.0)


@pytest.fixture
def one_year() -> Horizon:
    return Horizon(T=1.0)


@pytest.fixture
def sim_config() -> SimConfig:
    """Modest Monte Carlo settings that keep the suite fast."""
    return SimConfig(n_paths=20_000, seed=7)


@pytest.fixture
def synthetic_prices() -> PriceSeries:
    """Two years of GBM closes on consecutive calendar days."""
    rng = np.random.default_rng(2024)
    returns = (0.08 - 0.5 * 0.2**2) / 252 + 0.2 / np.sqrt(252) * rng.standard_normal(504)
    closes = 50.0 * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
    start = np.datetime64("2020-01-01")
    dates = [(start + np.timedelta64(i, "D")).astype(object) for i in range(closes.size)]
    return PriceSeries(dates=dates, closes=closes.tolist())


@pytest.fixture
def price_csv(tmp_path, synthetic_prices) -> str:
    """The synthetic series written as a `date`,`close` CSV file."""
    path = tmp_path / "prices.csv"
    path.write_text(price_series_to_csv(synthetic_prices), encoding="utf-8")
    return str(path)


# Test data constants
BOMB_MU = 0.4027
BOMB_SIGMA = 0.5905
BOMB_R = 0.0501
BOMB_LAMBDA = 0.024

CLASSICAL_RATIO = 1.0112
PRE_DEFAULT_RATIO = 0.7432

# gamma -> (weight at maturity, linearization slope)
PUBLISHED_PATHS = {
    1.5: (0.53132, 0.00449),
    2.0: (0.40766, 0.00511),
    2.5: (0.32974, 0.00489),
    3.0: (0.27657, 0.00451),
}
RATIO_TOL = 5e-4
SLOPE_TOL = 5e-5
