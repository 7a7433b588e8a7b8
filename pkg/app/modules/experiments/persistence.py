"""
Persistence of selection runs.

Turns a SelectionResult into an ExperimentRun row with its trajectory and
chosen edges, reported in the graph's original vertex ids.
"""
import logging
from typing import Optional

from sqlalchemy.orm import Session

from app.modules.experiments.models import ChosenEdgeRecord, ExperimentRun, TrajectoryPoint
from app.modules.graph.graph import Graph
from app.modules.graph.leaders import LeaderConfig
from app.modules.greedy.schemas import SelectionResult

logger = logging.getLogger(__name__)


def save_run(
    db: Session,
    network: str,
    g: Graph,
    cfg: LeaderConfig,
    result: SelectionResult,
    trajectory: list[float],
    seed: int,
    epsilon: Optional[float] = None,
    trace_method: Optional[str] = None,
) -> ExperimentRun:
    """
    Store one run and its children in a single transaction.

    Args:
        db: Database session
        network: Display name of the input graph
        g: Graph the run was computed on (labels give the original ids)
        cfg: Leader configuration
        result: Output of the selection algorithm
        trajectory: R_Q per k_step as reported (may be an exact re-evaluation)
        seed: Seed the run was made with
        epsilon: Sketch accuracy, approx runs only
        trace_method: How trajectory was evaluated; defaults to result.trace_method

    Returns:
        The persisted ExperimentRun
    """
    labels = g.labels
    run = ExperimentRun(
        network=network,
        n=g.n,
        m=g.m,
        q=cfg.q,
        leaders=",".join(str(int(labels[v])) for v in cfg.leaders),
        k=result.k,
        algorithm=result.algorithm,
        epsilon=epsilon if result.algorithm == "approx" else None,
        seed=seed,
        initial_value=float(trajectory[0]),
        final_value=float(trajectory[-1]),
        trace_method=trace_method or result.trace_method,
        total_seconds=result.total_seconds,
    )
    run.trajectory = [TrajectoryPoint(k_step=i, value=float(v)) for i, v in enumerate(trajectory)]
    run.chosen_edges = [
        ChosenEdgeRecord(
            step=i + 1,
            leader=int(labels[e.leader]),
            follower=int(labels[e.follower]),
            weight=e.weight,
        )
        for i, e in enumerate(result.chosen)
    ]

    try:
        db.add(run)
        db.commit()
        db.refresh(run)
    except Exception as e:
        logger.error(f"Error saving run for {network}: {e}", exc_info=True)
        db.rollback()
        raise

    logger.info(f"Saved run {run.id}: {run.algorithm} on {network}, k={run.k}, R_Q={run.final_value:.6g}")
    return run
