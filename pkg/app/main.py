"""
FD-MIMO Elevation Beamforming Simulator - REST Application
Submits experiments and serves their result tables
"""

from contextlib import asynccontextmanager
from datetime import datetime
import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.config import settings
from app.core.errors import SimulatorError
from app.models.experiment import ErrorResponse
from app.utils.logging import setup_logging
from app.api.routes import experiments, health
from app.api.deps import get_experiment_manager

setup_logging()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(
        f"Starting FD-MIMO simulator service ({settings.ENVIRONMENT}), "
        f"max {settings.MAX_CONCURRENT_EXPERIMENTS} concurrent experiments, SDB solver {settings.SDB_SOLVER}"
    )
    yield
    logger.info("Shutting down FD-MIMO simulator service...")
    await get_experiment_manager().shutdown()


app = FastAPI(
    title=settings.PROJECT_NAME,
    description=settings.DESCRIPTION,
    version=settings.VERSION,
    lifespan=lifespan,
    docs_url="/docs" if settings.ENVIRONMENT != "production" else None,
    redoc_url="/redoc" if settings.ENVIRONMENT != "production" else None,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.ALLOWED_HOSTS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(health.router, tags=["health"])
app.include_router(experiments.router, prefix="/api", tags=["experiments"])


@app.exception_handler(SimulatorError)
async def simulator_error_handler(request: Request, exc: SimulatorError) -> JSONResponse:
    """Numerical errors escaping a handler are client input problems"""
    logger.warning(f"{request.method} {request.url.path}: {type(exc).__name__}: {exc}")
    body = ErrorResponse(error=type(exc).__name__, detail=str(exc), timestamp=datetime.now().isoformat())
    return JSONResponse(status_code=400, content=body.model_dump())


@app.get("/")
async def root():
    return {
        "message": "FD-MIMO Elevation Beamforming Simulator API",
        "version": settings.VERSION,
        "docs": "/docs",
        "experiments": "/api/experiments",
        "health": "/api/health",
    }
