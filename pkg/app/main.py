"""Main FastAPI application."""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api.v1.endpoints import router as api_router
from app.core.config import settings
from app.services.presets import PRESET_NAMES, get_preset

# Configure logging
logging.basicConfig(
    level=settings.LOG_LEVEL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Validate the built-in presets once at startup.

    Args:
        app: FastAPI application instance
    """
    try:
        for name in PRESET_NAMES:
            get_preset(name, desk=True)
        logger.info(f"Loaded {len(PRESET_NAMES)} presets. Application startup complete.")
    except Exception as e:
        logger.error(f"Failed to load presets: {e}")
        raise

    yield

    logger.info("Application shutting down.")


app = FastAPI(
    title=settings.PROJECT_NAME,
    description="Energy-stable E-SAV / RE-SAV time stepping for gradient flows",
    version="1.0.0",
    lifespan=lifespan
)

app.include_router(api_router, prefix=settings.API_V1_STR)


@app.get("/health", summary="Health check", tags=["Health"])
def health_check() -> dict:
    """
    Health check endpoint to verify API is running.

    Returns:
        dict: Status information
    """
    return {
        "status": "ok",
        "presets": len(PRESET_NAMES),
        "service": settings.PROJECT_NAME,
    }
