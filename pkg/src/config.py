import os

API_VERSION = "v1"
API_HOST = os.getenv("MERTON_API_HOST", "0.0.0.0")
API_PORT = int(os.getenv("MERTON_API_PORT", "5000"))
API_RELOAD = os.getenv("MERTON_API_RELOAD", "true").lower() == "true"

MERTON_DATA_DIR = os.getenv(
    "MERTON_DATA_DIR",
    # Directory holding vendored or user-supplied daily price CSVs
    "data",
)
DEFAULT_DATASET = os.getenv("MERTON_DEFAULT_DATASET", "BOMB.csv")

TRADING_DAYS = int(os.getenv("MERTON_TRADING_DAYS", "252"))
LOG_LEVEL = os.getenv("MERTON_LOG_LEVEL", "INFO").upper()

# Monte Carlo: paths are drawn in fixed-size chunks, each keyed by (seed, chunk index)
MC_WORKERS = max(1, int(os.getenv("MERTON_MC_WORKERS", "1")))
MC_CHUNK_SIZE = max(1, int(os.getenv("MERTON_MC_CHUNK_SIZE", "8192")))
# chunks shrink so paths x steps never exceeds this
MC_MAX_CHUNK_CELLS = max(1, int(os.getenv("MERTON_MC_MAX_CHUNK_CELLS", "4194304")))

DEFAULT_PRECISION = int(os.getenv("MERTON_PRECISION", "6"))

# gamma within this distance of 1 is classified as logarithmic utility
LOG_UTILITY_TOL = 1e-12
# gamma within this distance of 1 routes the power solver to the closed-form log solution
LOG_ROUTING_TOL = 1e-4
# the linearization around maturity is only advertised up to this remaining horizon (years)
LINEARIZATION_MAX_HORIZON = 1.0


def dataset_path(name: str | None = None) -> str:
    """Resolve a dataset file name against the configured data directory."""
    return os.path.join(MERTON_DATA_DIR, name or DEFAULT_DATASET)
