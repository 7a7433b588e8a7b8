"""
Exact greedy edge addition with a dense inverse kept current by rank-one updates.
"""
import logging
import time
from typing import Sequence

import numpy as np

from app.errors import InputValidationError
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import GroundedSystem, add_candidate, grounded_laplacian
from app.modules.graph.leaders import LeaderConfig
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.approx import sketched_trace
from app.modules.greedy.schemas import ApproxParams, GainEstimate, SelectionResult
from app.modules.linalg.dense import DENSE_CAP, DenseInverse, dense_inverse, sherman_morrison_update

logger = logging.getLogger(__name__)

# Gains closer than this (relative) to the round maximum count as tied
GAIN_TIE_TOL = 1e-10


def effective_resistance(
    sys: GroundedSystem,
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> float:
    """
    R_Q = Tr(L(S)_Q^-1).

    Exact through the dense inverse within the cap; above it, the sketched
    trace estimate (accuracy epsilon of params).
    """
    cap = DENSE_CAP if dense_cap is None else dense_cap
    if sys.dim <= cap:
        return dense_inverse(sys, cap).trace()
    logger.info(f"R_Q of dim={sys.dim} above dense cap {cap}, using sketched trace")
    return sketched_trace(sys, params or ApproxParams())


def candidate_gains(cfg: LeaderConfig, invm: DenseInverse) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """t, r per follower index and the gain of every candidate, in candidate order."""
    t = invm.column_norms_sq()
    r = invm.diagonal()
    w = cfg.cand_weights
    gains = w * t[cfg.cand_index] / (1.0 + w * r[cfg.cand_index])
    return t, r, gains


def exact_gains(
    sys: GroundedSystem,
    invm: DenseInverse,
    candidates: Sequence[CandidateEdge] | None = None,
) -> list[GainEstimate]:
    """
    Gain w t(u) / (1 + w r(u)) for each candidate (all of E_Q by default).

    invm must be the inverse of sys.matrix.
    """
    cfg = sys.config
    t, r, _ = candidate_gains(cfg, invm)
    edges = cfg.candidates if candidates is None else list(candidates)
    estimates = []
    for edge in edges:
        u = cfg.follower_index(edge.follower)
        gain = edge.weight * t[u] / (1.0 + edge.weight * r[u])
        estimates.append(GainEstimate(edge=edge, t_u=float(t[u]), r_u=float(r[u]), gain=float(gain)))
    return estimates


def best_available(gains: np.ndarray, available: np.ndarray, tie_tol: float = GAIN_TIE_TOL) -> int:
    """
    Position of the largest available gain.

    Candidates are in canonical (follower, leader) order, so taking the first
    position within tie_tol of the maximum sends ties to the smallest pair.
    """
    masked = np.where(available, gains, -np.inf)
    top = masked.max()
    return int(np.flatnonzero(masked >= top - tie_tol * abs(top))[0])


def run_exact(g: Graph, cfg: LeaderConfig, k: int, dense_cap: int | None = None) -> SelectionResult:
    """
    Exact greedy: k rounds of argmax gain with Sherman-Morrison maintenance.

    A follower may be chosen again through another leader in a later round;
    only the exact (leader, follower) pair leaves the pool once taken.

    Args:
        g: Connected graph
        cfg: Leader set and candidates
        k: Number of edges to add
        dense_cap: Largest L_Q dimension to invert

    Returns:
        SelectionResult with the exact trace after every round

    Raises:
        InputValidationError: k negative or above the candidate count
        CapacityError: L_Q larger than the dense cap
        NumericalError: Factorization failure
    """
    if not 0 <= k <= cfg.candidate_count:
        raise InputValidationError(f"k={k} must lie in [0, {cfg.candidate_count}] (candidate count)")

    setup_start = time.perf_counter()
    sys = grounded_laplacian(g, cfg)
    invm = dense_inverse(sys, dense_cap)
    setup_seconds = time.perf_counter() - setup_start
    logger.info(f"Exact greedy: dim={sys.dim}, candidates={cfg.candidate_count}, k={k}, setup {setup_seconds:.2f}s")

    available = np.ones(cfg.candidate_count, dtype=bool)
    chosen: list[CandidateEdge] = []
    trajectory = [invm.trace()]
    round_seconds: list[float] = []

    for round_index in range(k):
        start = time.perf_counter()
        _, _, gains = candidate_gains(cfg, invm)
        best = best_available(gains, available)
        available[best] = False
        edge = cfg.candidate_at(best)
        sherman_morrison_update(invm, int(cfg.cand_index[best]), edge.weight, inplace=True)
        sys = add_candidate(sys, edge)
        chosen.append(edge)
        trajectory.append(invm.trace())
        round_seconds.append(time.perf_counter() - start)
        logger.info(
            f"Exact round {round_index + 1}/{k}: edge {edge.leader}-{edge.follower}, "
            f"gain {gains[best]:.6g}, R_Q={trajectory[-1]:.6g}"
        )

    return SelectionResult(
        chosen=chosen,
        trajectory=trajectory,
        round_seconds=round_seconds,
        setup_seconds=setup_seconds,
        algorithm="exact",
        params={"dense_cap": DENSE_CAP if dense_cap is None else dense_cap},
    )
