from fastapi import APIRouter

from src import config
from src.models.report_schemas import CommandName, RunConfig
from src.models.schemas import CommandInfo, ServiceMetadata

router = APIRouter(prefix=f"/api/{config.API_VERSION}", tags=["Info"])

COMMAND_DESCRIPTIONS = {
    CommandName.RATIO: "Classical and pre-default Merton ratios with the ratio-vs-intensity series.",
    CommandName.PATH: "Non-myopic power-utility weight paths and their diagnostics.",
    CommandName.VALUE: "Pre-default, post-default and total value functions.",
    CommandName.SIMULATE: "Monte Carlo verification of the optimal policies.",
    CommandName.ESTIMATE: "Drift and volatility estimates from daily closes.",
    CommandName.REPRODUCE: "Published allocation tables with pass/fail per cell.",
}
HTTP_COMMANDS = {CommandName.RATIO, CommandName.PATH, CommandName.VALUE}


@router.get("/info", response_model=ServiceMetadata)
async def info():
    defaults = RunConfig(command=CommandName.RATIO)
    return ServiceMetadata(
        commands=[
            CommandInfo(key=command.value, description=description, http=command in HTTP_COMMANDS)
            for command, description in COMMAND_DESCRIPTIONS.items()
        ],
        defaults={
            "mu": defaults.mu,
            "sigma": defaults.sigma,
            "r": defaults.r,
            "lambda": defaults.lam,
            "gamma": defaults.gamma,
            "T": defaults.T,
            "trading_days": config.TRADING_DAYS,
        },
    )
