"""
Experiments router for the runs API.

Runs a selection algorithm on a small inline graph and stores the result;
lists and retrieves stored runs.
"""
import io
import logging
import os
from typing import List

from fastapi import APIRouter, Depends, HTTPException, status
from pydantic import ValidationError
from sqlalchemy.exc import OperationalError
from sqlalchemy.orm import Session

from app.errors import InputValidationError, NumericalError, PolarizationError
from app.modules.experiments.database import get_db
from app.modules.experiments.models import ExperimentRun
from app.modules.experiments.persistence import save_run
from app.modules.experiments.runner import execute_selection, reported_trajectory, resolve_leaders
from app.modules.experiments.schemas import (
    ChosenEdgeResponse,
    RunDetailResponse,
    RunRequest,
    RunResponse,
    RunSpec,
    TrajectoryPointResponse,
)
from app.modules.graph.graph import largest_connected_component, load_edge_list
from app.modules.graph.leaders import make_leader_config
from app.modules.linalg.dense import DENSE_CAP

logger = logging.getLogger(__name__)

API_MAX_VERTICES = int(os.getenv("POLAR_API_MAX_N", "2000"))

router = APIRouter(prefix="/runs", tags=["runs"])


def _detail(run: ExperimentRun) -> RunDetailResponse:
    summary = RunResponse.model_validate(run)
    return RunDetailResponse(
        **summary.model_dump(),
        leaders=run.leader_ids,
        trajectory=[TrajectoryPointResponse.model_validate(p) for p in run.trajectory],
        chosen_edges=[ChosenEdgeResponse.model_validate(e) for e in run.chosen_edges],
    )


@router.post("", response_model=RunDetailResponse, status_code=status.HTTP_201_CREATED)
def create_run(request: RunRequest, db: Session = Depends(get_db)):
    """
    Run one selection algorithm synchronously and store the result.

    The edge list is parsed like an input file; only its largest connected
    component is used. Leaders are original ids, or sampled from the seed.
    """
    try:
        g = largest_connected_component(load_edge_list(io.StringIO(request.edge_list), weighted=request.weighted))
        if g.n > API_MAX_VERTICES:
            raise InputValidationError(
                f"graph has {g.n} vertices; the API accepts at most {API_MAX_VERTICES}, use the CLI instead"
            )
        spec = RunSpec(q=request.q, leaders=request.leaders, seed=request.seed)
        cfg = make_leader_config(g, resolve_leaders(g, spec, 0))
        result = execute_selection(
            request.algorithm,
            g,
            cfg,
            request.k,
            seed=request.seed,
            epsilon=request.epsilon,
            top_cent_mode=request.top_cent_mode,
        )
        trajectory = reported_trajectory(result, g, cfg, None)
        trace_method = "exact" if cfg.dim <= DENSE_CAP else result.trace_method
        run = save_run(db, request.name, g, cfg, result, trajectory, request.seed, request.epsilon, trace_method)
        return _detail(run)
    except (InputValidationError, ValidationError) as e:
        logger.info(f"Rejected run request: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except NumericalError as e:
        logger.error(f"Numerical failure during run: {e}", exc_info=True)
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(e))
    except PolarizationError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except OperationalError as e:
        logger.error(f"Database connection error saving run: {e}", exc_info=True)
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="Database is not available. Please check your database connection."
        )


@router.get("", response_model=List[RunResponse])
async def list_runs(skip: int = 0, limit: int = 100, db: Session = Depends(get_db)):
    """
    List stored runs, most recent first.
    """
    try:
        runs = db.query(ExperimentRun).order_by(
            ExperimentRun.created_at.desc(), ExperimentRun.id.desc()
        ).offset(skip).limit(limit).all()
        return [RunResponse.model_validate(r) for r in runs]
    except OperationalError as e:
        logger.error(f"Database connection error listing runs: {e}", exc_info=True)
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="Database is not available. Please check your database connection."
        )


@router.get("/{run_id}", response_model=RunDetailResponse)
async def get_run(run_id: int, db: Session = Depends(get_db)):
    """
    Get one run with its trajectory and chosen edges.
    """
    try:
        run = db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
        if not run:
            raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Run not found")
        return _detail(run)
    except HTTPException:
        raise
    except OperationalError as e:
        logger.error(f"Database connection error retrieving run {run_id}: {e}", exc_info=True)
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="Database is not available. Please check your database connection."
        )
