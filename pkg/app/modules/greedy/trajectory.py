"""
Objective curves for an already chosen edge sequence.
"""
import logging
from typing import Literal, Sequence

from app.modules.graph.grounded import GroundedSystem, add_candidate
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.approx import sketched_trace
from app.modules.greedy.schemas import ApproxParams
from app.modules.linalg.dense import DENSE_CAP, dense_inverse, sherman_morrison_update

logger = logging.getLogger(__name__)


def exact_trajectory(
    sys: GroundedSystem,
    chosen: Sequence[CandidateEdge],
    dense_cap: int | None = None,
) -> list[float]:
    """Exact R_Q after each prefix of chosen (length len(chosen) + 1), one inversion plus rank-one updates."""
    invm = dense_inverse(sys, dense_cap)
    values = [invm.trace()]
    for edge in chosen:
        sys = add_candidate(sys, edge)
        sherman_morrison_update(invm, sys.config.follower_index(edge.follower), edge.weight, inplace=True)
        values.append(invm.trace())
    return values


def objective_trajectory(
    sys: GroundedSystem,
    chosen: Sequence[CandidateEdge],
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> tuple[list[float], Literal["exact", "sketched"]]:
    """
    R_Q after each prefix, exact within the dense cap and sketched above it.

    Returns:
        (values, method) where method is "exact" or "sketched"
    """
    cap = DENSE_CAP if dense_cap is None else dense_cap
    if sys.dim <= cap:
        return exact_trajectory(sys, chosen, cap), "exact"

    params = params or ApproxParams()
    logger.info(f"Trajectory of {len(chosen)} edges on dim={sys.dim} uses sketched traces")
    values = [sketched_trace(sys, params, 0)]
    for step, edge in enumerate(chosen, start=1):
        sys = add_candidate(sys, edge)
        values.append(sketched_trace(sys, params, step))
    return values, "sketched"
