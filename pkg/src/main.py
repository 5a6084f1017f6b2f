import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from src import config
from src.routes import allocation_route, health_route, info_route

logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Merton Default Allocation",
    description="Optimal stock/cash allocation when the stock can default",
    version=config.API_VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(health_route.router)
app.include_router(info_route.router)
app.include_router(allocation_route.router)
