"""API endpoints for running simulations and convergence studies."""
import logging

from fastapi import APIRouter, HTTPException

from app.core.config import settings
from app.core.errors import SimulationError
from app.schemas.experiment import ExperimentConfig
from app.schemas.report import ConvergenceReport, ConvergenceRequest, SimulationResponse
from app.services import harness
from app.services.presets import get_preset

logger = logging.getLogger(__name__)
router = APIRouter()


def _check_budget(config: ExperimentConfig, dt: float) -> None:
    steps = config.t_end / dt
    if steps > settings.API_MAX_STEPS:
        raise ValueError(
            f"{steps:.0f} steps requested; at most {settings.API_MAX_STEPS} are allowed over HTTP"
        )


@router.get("/presets/{example}", response_model=ExperimentConfig, summary="Preset configuration")
def read_preset(example: str, desk: bool = False) -> ExperimentConfig:
    """
    Return the configuration of a built-in example.

    Raises:
        HTTPException: 404 for an unknown example
    """
    try:
        return get_preset(example, desk=desk).config
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))


@router.post("/simulate", response_model=SimulationResponse, summary="Run one simulation")
def simulate(config: ExperimentConfig) -> SimulationResponse:
    """
    Run a configuration to t_end and return its trace.

    Raises:
        HTTPException: 400 for invalid parameters, 422 when the run aborts, 500 for server errors
    """
    try:
        _check_budget(config, config.dt)
        trace, _ = harness.run(config.model_copy(update={"snapshot_times": []}))
        last = trace[-1]
        return SimulationResponse(
            steps=len(trace),
            final_time=last.time,
            final_energy=last.energy_original,
            final_ln_r_scaled=last.ln_r_scaled,
            max_xi_deviation=max(abs(r.xi - 1.0) for r in trace),
            trace=trace,
        )
    except SimulationError as e:
        logger.warning(f"Simulation aborted: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        logger.warning(f"Invalid simulation request: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception(f"Unexpected error during simulation: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@router.post("/converge", response_model=ConvergenceReport, summary="Temporal convergence study")
def converge(request: ConvergenceRequest) -> ConvergenceReport:
    """
    Errors against a dt_ref reference and the observed rates between successive dts.

    Raises:
        HTTPException: 400 for invalid parameters, 422 when a run aborts, 500 for server errors
    """
    try:
        _check_budget(request.config, request.dt_ref)
        return harness.convergence_study(request.config, request.dt_list, request.dt_ref)
    except SimulationError as e:
        logger.warning(f"Convergence run aborted: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        logger.warning(f"Invalid convergence request: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception(f"Unexpected error during convergence study: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")
