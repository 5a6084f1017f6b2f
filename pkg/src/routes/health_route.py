import logging
import os

from fastapi import APIRouter, status
from fastapi.responses import JSONResponse

from src import config
from src.errors import MertonError
from src.models.report_schemas import CommandName, RunConfig
from src.models.schemas import HealthResponse
from src.services.log_solution import pre_default_ratio_log

logger = logging.getLogger(__name__)
router = APIRouter(prefix=f"/api/{config.API_VERSION}", tags=["Health"])


@router.get("/health", response_model=HealthResponse)
async def get_health():
    dataset_available = os.path.exists(config.dataset_path())
    try:
        # solver check on the default market
        pre_default_ratio_log(RunConfig(command=CommandName.RATIO).market)
    except MertonError as e:
        logger.error(f"Health check failed: {e}")
        body = HealthResponse(
            message=f"solver check failed: {e}",
            status=status.HTTP_503_SERVICE_UNAVAILABLE,
            dataset_available=dataset_available,
        )
        return JSONResponse(status_code=status.HTTP_503_SERVICE_UNAVAILABLE, content=body.model_dump())
    return HealthResponse(message="ALL IS WELL", status=status.HTTP_200_OK, dataset_available=dataset_available)
