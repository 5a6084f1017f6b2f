import logging

from fastapi import APIRouter, HTTPException, status
from pydantic import ValidationError

from src import config
from src.errors import MertonError
from src.models.report_schemas import CommandName, CommandReport, RunConfig
from src.models.schemas import AllocationRequest
from src.services.reports import build_report

logger = logging.getLogger(__name__)
router = APIRouter(prefix=f"/api/{config.API_VERSION}", tags=["Allocation"])


def _run(command: CommandName, request: AllocationRequest) -> CommandReport:
    try:
        cfg = RunConfig(command=command, **request.model_dump(exclude_none=True))
        return build_report(cfg)
    except ValidationError as e:
        logger.error(f"Invalid {command.value} request: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e)) from e
    except MertonError as e:
        logger.error(f"Error during {command.value}: {e}")
        raise HTTPException(status_code=e.status_code, detail=str(e)) from e


@router.post("/ratio", response_model=CommandReport)
def ratio(request: AllocationRequest) -> CommandReport:
    return _run(CommandName.RATIO, request)


@router.post("/path", response_model=CommandReport)
def path(request: AllocationRequest) -> CommandReport:
    return _run(CommandName.PATH, request)


@router.post("/value", response_model=CommandReport)
def value(request: AllocationRequest) -> CommandReport:
    return _run(CommandName.VALUE, request)
