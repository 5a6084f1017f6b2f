import io
import logging
import math
import sys
from collections.abc import Iterable
from pathlib import Path
from typing import IO

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src import config
from src.errors import DataIngestionError, InadmissiblePolicyError, ValidationFailure
from src.models.estimation_schemas import AllocationReport, AllocationRow, EstimationResult, PriceSeries
from src.models.market_schemas import Horizon, MarketParams
from src.services.log_solution import classical_merton_ratio, pre_default_ratio_log
from src.services.power_solution import integrate_weight_path, limiting_weight

logger = logging.getLogger(__name__)

EXPECTED_SCHEMA = "a CSV with a header row and columns `date` (ISO-8601) and `close` (decimal)"
CLOSE_COLUMNS = ("close", "adj close", "adj_close")


def load_price_series(source: str | Path | IO[str]) -> PriceSeries:
    """
    Read daily closes from a CSV path, an open text stream, or "-" for standard input.

    Column names are matched case-insensitively; extra columns are ignored. Rows whose
    date or close cannot be parsed are skipped with a counted warning.
    """
    label = getattr(source, "name", str(source))
    try:
        if isinstance(source, str | Path) and str(source) == "-":
            frame = pd.read_csv(sys.stdin)
            label = "<stdin>"
        else:
            frame = pd.read_csv(source)
    except FileNotFoundError as e:
        raise DataIngestionError(f"dataset {label} not found; expected {EXPECTED_SCHEMA}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataIngestionError(f"cannot parse {label}: {e}; expected {EXPECTED_SCHEMA}") from e

    frame.columns = [str(column).strip().lower() for column in frame.columns]
    close_column = next((column for column in CLOSE_COLUMNS if column in frame.columns), None)
    if "date" not in frame.columns or close_column is None:
        raise DataIngestionError(f"{label} has columns {list(frame.columns)}; expected {EXPECTED_SCHEMA}")

    prices = pd.DataFrame(
        {
            "date": pd.to_datetime(frame["date"], errors="coerce", format="ISO8601"),
            "close": pd.to_numeric(frame[close_column], errors="coerce"),
        }
    )
    skipped = int(prices.isna().any(axis=1).sum())
    if skipped:
        logger.warning(f"skipped {skipped} unparseable rows in {label}")
    prices = prices.dropna().sort_values("date", kind="stable")
    duplicates = int(prices["date"].duplicated().sum())
    if duplicates:
        logger.warning(f"dropped {duplicates} rows with repeated dates in {label}")
        prices = prices.drop_duplicates("date", keep="last")
    if (prices["close"] <= 0).any():
        raise DataIngestionError(f"{label} contains nonpositive closing prices")
    if len(prices) < 2:
        raise DataIngestionError(f"{label} has fewer than two usable rows; expected {EXPECTED_SCHEMA}")

    logger.info(f"loaded {len(prices)} closes from {label}")
    return PriceSeries(dates=list(prices["date"].dt.date), closes=prices["close"].astype(float).tolist())


def price_series_to_csv(series: PriceSeries) -> str:
    """Render a series in the same `date`,`close` schema the loader reads."""
    frame = pd.DataFrame({"date": [d.isoformat() for d in series.dates], "close": series.closes})
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n", float_format="%.10g")
    return buffer.getvalue()


def log_returns(series: PriceSeries) -> np.ndarray:
    closes = np.asarray(series.closes, dtype=float)
    if np.any(closes <= 0):
        raise DataIngestionError("log returns need positive prices")
    return np.diff(np.log(closes))


def estimate_params(returns: Iterable[float], trading_days: int = config.TRADING_DAYS) -> EstimationResult:
    """
    Annualized estimates mu = n_trade * mean(X) and
    sigma = sqrt(n_trade) * sqrt(sum(X^2) / (n - 1) - n / (n - 1) * mean(X)^2).

    mu is the drift of log prices; no variance correction is added.
    """
    x = np.asarray(list(returns), dtype=float)
    n = int(x.size)
    if n < 2:
        raise ValidationFailure(f"need at least two returns, got {n}")
    if trading_days <= 0:
        raise ValidationFailure(f"trading_days must be positive, got {trading_days}")
    mean = math.fsum(x) / n
    variance = math.fsum(x * x) / (n - 1) - n / (n - 1) * mean * mean
    if variance < 0:
        logger.warning(f"variance estimate {variance:.3g} < 0 clamped to 0")
        variance = 0.0
    return EstimationResult(
        mu_hat=trading_days * mean,
        sigma_hat=math.sqrt(trading_days) * math.sqrt(variance),
        n=n,
        trading_days=trading_days,
    )


def allocation_report(
    mp: MarketParams, gammas: Iterable[float], estimation: EstimationResult | None = None
) -> AllocationReport:
    """Log-utility ratios plus the maturity weight and linearization slope for each gamma."""
    rows = []
    for gamma in gammas:
        try:
            solution = integrate_weight_path(mp, float(gamma), Horizon(T=1.0, n_steps=1))
        except InadmissiblePolicyError as e:
            logger.warning(f"gamma={gamma}: {e}; tabulating the limiting weight")
            limit = limiting_weight(mp, float(gamma))
            rows.append(
                AllocationRow(
                    gamma=float(gamma),
                    pi_terminal=limit,
                    slope=0.0,
                    label=f"{limit:.5f} (limit, not admissible)",
                    admissible=False,
                )
            )
            continue
        if solution.routed_to_log or solution.kappa_T == 0.0:
            label = f"{solution.pi_T:.5f}"
        else:
            sign = "-" if solution.kappa_T >= 0 else "+"
            label = f"{solution.pi_T:.5f} {sign} {abs(solution.kappa_T):.5f}(T - t)"
        rows.append(AllocationRow(gamma=float(gamma), pi_terminal=solution.pi_T, slope=solution.kappa_T, label=label))
    return AllocationReport(
        estimation=estimation,
        market=mp,
        classical_ratio=classical_merton_ratio(mp, 1.0),
        pre_default_ratio=pre_default_ratio_log(mp),
        rows=rows,
    )


def full_pipeline(
    csv_source: str | Path | IO[str] | PriceSeries,
    r: float,
    lam: float,
    gammas: Iterable[float] = (1.0,),
    trading_days: int = config.TRADING_DAYS,
) -> AllocationReport:
    """Estimate drift and volatility from prices, then compute the allocation table."""
    series = csv_source if isinstance(csv_source, PriceSeries) else load_price_series(csv_source)
    estimation = estimate_params(log_returns(series), trading_days)
    logger.info(f"estimated mu={estimation.mu_hat:.6g}, sigma={estimation.sigma_hat:.6g} from {estimation.n} returns")
    if estimation.sigma_hat == 0:
        raise ValidationFailure("estimated volatility is zero, allocations are undefined")
    try:
        mp = MarketParams(mu=estimation.mu_hat, sigma=estimation.sigma_hat, r=r, lam=lam)
    except ValidationError as e:
        raise ValidationFailure(str(e)) from e
    return allocation_report(mp, gammas, estimation)
