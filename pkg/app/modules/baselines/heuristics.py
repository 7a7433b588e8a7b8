"""
Heuristic baselines: random edges, highest-degree followers, most central followers.

TopDegree and TopCent rank followers, then link the best-ranked follower to
as many distinct random leaders as the remaining budget and its free pairs
allow, spilling what is left to the next follower in rank.
"""
import logging
import time

import numpy as np

from app.errors import InputValidationError
from app.modules.baselines.schemas import StrategyTag, TopCentMode
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import grounded_laplacian
from app.modules.graph.leaders import LeaderConfig, make_leader_config
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.approx import accumulate
from app.modules.greedy.schemas import ApproxParams, SelectionResult
from app.modules.greedy.trajectory import objective_trajectory
from app.modules.linalg.dense import DENSE_CAP, dense_inverse
from app.modules.linalg.solver import make_solve_handle, sdd_solve

logger = logging.getLogger(__name__)

# Scores within this (relative to the largest magnitude) of their neighbor in sorted order share a rank
SCORE_TIE_TOL = 1e-10


def _check_budget(cfg: LeaderConfig, k: int) -> None:
    if not 0 <= k <= cfg.candidate_count:
        raise InputValidationError(f"k={k} must lie in [0, {cfg.candidate_count}] (candidate count)")


def _finish(
    g: Graph,
    cfg: LeaderConfig,
    chosen: list[CandidateEdge],
    tag: StrategyTag,
    algorithm: str,
    selection_seconds: float,
    dense_cap: int | None,
    params: ApproxParams | None,
) -> SelectionResult:
    sys = grounded_laplacian(g, cfg)
    trajectory, method = objective_trajectory(sys, chosen, dense_cap, params)
    return SelectionResult(
        chosen=chosen,
        trajectory=trajectory,
        round_seconds=[selection_seconds / len(chosen)] * len(chosen) if chosen else [],
        algorithm=algorithm,
        params=tag.model_dump(exclude_none=True),
        trace_method=method,
    )


def run_random(
    g: Graph,
    cfg: LeaderConfig,
    k: int,
    seed: int,
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> SelectionResult:
    """k candidates drawn uniformly without replacement."""
    _check_budget(cfg, k)
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    picks = rng.choice(cfg.candidate_count, size=k, replace=False)
    chosen = [cfg.candidate_at(int(i)) for i in picks]
    elapsed = time.perf_counter() - start
    return _finish(g, cfg, chosen, StrategyTag(name="Random", seed=seed), "random", elapsed, dense_cap, params)


def link_ranked_followers(cfg: LeaderConfig, ranked: np.ndarray, k: int, rng: np.random.Generator) -> list[CandidateEdge]:
    """
    Spend the budget on followers in rank order, random distinct leaders each.

    Raises:
        InputValidationError: The ranked followers run out of free pairs before k edges
    """
    chosen: list[CandidateEdge] = []
    remaining = k
    for follower in ranked:
        if remaining == 0:
            break
        lo = np.searchsorted(cfg.cand_followers, follower, side="left")
        hi = np.searchsorted(cfg.cand_followers, follower, side="right")
        if hi == lo:
            continue
        take = min(remaining, hi - lo)
        picks = rng.choice(np.arange(lo, hi), size=take, replace=False)
        chosen.extend(cfg.candidate_at(int(i)) for i in picks)
        remaining -= take
    if remaining:
        raise InputValidationError(f"budget k={k} cannot be filled: {remaining} edge(s) left after all followers")
    return chosen


def rank_ascending(followers: np.ndarray, scores: np.ndarray, tie_tol: float = SCORE_TIE_TOL) -> np.ndarray:
    """
    Followers by increasing score, ties to the smaller id.

    Scores are grouped before sorting: each sorted score within tie_tol of the
    previous one joins its group, so values equal up to rounding tie.
    """
    if scores.size == 0:
        return followers
    order = np.argsort(scores, kind="stable")
    tol = tie_tol * max(float(np.abs(scores).max()), np.finfo(float).tiny)
    step = np.diff(scores[order]) > tol
    group = np.empty(scores.size, dtype=np.int64)
    group[order] = np.concatenate([[0], np.cumsum(step)])
    return followers[np.lexsort((followers, group))]


def run_top_degree(
    g: Graph,
    cfg: LeaderConfig,
    k: int,
    seed: int,
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> SelectionResult:
    """Reinforce the followers of highest weighted degree."""
    _check_budget(cfg, k)
    start = time.perf_counter()
    ranked = rank_ascending(cfg.followers, -g.degree[cfg.followers])
    chosen = link_ranked_followers(cfg, ranked, k, np.random.default_rng(seed))
    elapsed = time.perf_counter() - start
    return _finish(g, cfg, chosen, StrategyTag(name="TopDegree", seed=seed), "top-degree", elapsed, dense_cap, params)


def resistance_centrality(
    g: Graph,
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> np.ndarray:
    """
    R_v = Tr(L_{v}^-1) for every vertex v of a connected graph.

    With G the inverse of L grounded at vertex 0 (zero row and column for 0),
    R_v = Tr(G) + n G_vv - 2 (G 1)_v. G is dense within the cap; above it
    diag(G) comes from the sketched denominator and G 1 from one solve.
    """
    if g.n == 1:
        return np.zeros(1)
    cap = DENSE_CAP if dense_cap is None else dense_cap
    sys = grounded_laplacian(g, make_leader_config(g, [0], candidates=[]))

    if sys.dim <= cap:
        inv = dense_inverse(sys, cap).inv
        diag = np.concatenate([[0.0], np.diagonal(inv)])
        row_sums = np.concatenate([[0.0], inv.sum(axis=1)])
    else:
        params = params or ApproxParams()
        logger.info(f"Resistance centrality on n={g.n} via sketched diagonal")
        acc = accumulate(sys, params, numerator=False)
        diag = np.concatenate([[0.0], acc.r_hat])
        handle = make_solve_handle(sys, params.epsilon / 6.0, params.preconditioner)
        row_sums = np.concatenate([[0.0], sdd_solve(handle, np.ones(sys.dim))])
    return diag.sum() + g.n * diag - 2.0 * row_sums


def grounded_resistance(g: Graph, cfg: LeaderConfig, dense_cap: int | None = None) -> np.ndarray:
    """R(u, Q) = (L_Q^-1)_uu per follower index."""
    return dense_inverse(grounded_laplacian(g, cfg), dense_cap).diagonal()


def run_top_cent(
    g: Graph,
    cfg: LeaderConfig,
    k: int,
    seed: int,
    mode: TopCentMode = "information",
    dense_cap: int | None = None,
    params: ApproxParams | None = None,
) -> SelectionResult:
    """
    Reinforce the most central followers (smallest resistance score first).

    mode "information" scores by whole-graph resistance centrality R_v;
    "grounded" scores by R(u, Q), the resistance from u to the leader group.
    """
    _check_budget(cfg, k)
    start = time.perf_counter()
    if mode == "information":
        scores = resistance_centrality(g, dense_cap, params)[cfg.followers]
    elif mode == "grounded":
        scores = grounded_resistance(g, cfg, dense_cap)
    else:
        raise InputValidationError(f"unknown TopCent mode {mode!r}")
    ranked = rank_ascending(cfg.followers, scores)
    chosen = link_ranked_followers(cfg, ranked, k, np.random.default_rng(seed))
    elapsed = time.perf_counter() - start
    tag = StrategyTag(name="TopCent", seed=seed, mode=mode)
    return _finish(g, cfg, chosen, tag, "top-cent", elapsed, dense_cap, params)
