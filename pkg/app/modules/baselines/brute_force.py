"""
Exhaustive optimum and the exact polarization oracle.

Every j-subset U of candidates is scored in batches with the Woodbury
identity on the base inverse G = L_Q^-1:

    Tr((L_Q + E W E^T)^-1) = Tr(G) - tr((W^-1 + G_UU)^-1 (G^2)_UU)

where E holds the unit vectors of the subset's followers. Subsets are
enumerated in lexicographic order of candidate position and split into
fixed chunks, so the winner (smallest value, then first in order) does not
depend on how many workers score the chunks.
"""
import itertools
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.errors import CapacityError, InputValidationError
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import grounded_laplacian
from app.modules.graph.leaders import LeaderConfig
from app.modules.greedy.schemas import WORKERS, SelectionResult
from app.modules.linalg.dense import dense_inverse

logger = logging.getLogger(__name__)

BRUTE_FORCE_CAP = int(os.getenv("POLAR_BRUTE_FORCE_CAP", "1000000"))
CHUNK_SIZE = 4096
# Values closer than this (relative) count as ties and go to the earlier subset
TIE_TOL = 1e-12


class _SubsetScorer:
    """Batch evaluator of Tr(L(S)_Q^-1) for candidate subsets."""

    def __init__(self, g_inv: np.ndarray, cfg: LeaderConfig):
        followers, self.slot = np.unique(cfg.cand_index, return_inverse=True)
        cols = g_inv[:, followers]
        self.g_sub = cols[followers]
        self.g2_sub = cols.T @ cols
        self.inv_w = 1.0 / cfg.cand_weights
        self.base_trace = float(np.trace(g_inv))

    def score(self, combos: np.ndarray) -> np.ndarray:
        if combos.shape[1] == 0:
            return np.full(combos.shape[0], self.base_trace)
        slots = self.slot[combos]
        c = self.g_sub[slots[:, :, None], slots[:, None, :]]
        c += np.einsum("bi,ij->bij", self.inv_w[combos], np.eye(combos.shape[1]))
        rhs = self.g2_sub[slots[:, :, None], slots[:, None, :]]
        reduction = np.einsum("bii->b", np.linalg.solve(c, rhs))
        return self.base_trace - reduction


def _chunks(n_candidates: int, j: int):
    combos = itertools.combinations(range(n_candidates), j)
    while True:
        block = list(itertools.islice(combos, CHUNK_SIZE))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64).reshape(len(block), j)


def _chunk_best(scorer: _SubsetScorer, combos: np.ndarray) -> tuple[float, np.ndarray]:
    values = scorer.score(combos)
    low = values.min()
    first = int(np.flatnonzero(values <= low + TIE_TOL * abs(low))[0])
    return float(values[first]), combos[first]


def _optimum(scorer: _SubsetScorer, n_candidates: int, j: int, workers: int) -> tuple[float, np.ndarray]:
    best_value, best_combo = math.inf, None

    def consider(result: tuple[float, np.ndarray]) -> None:
        nonlocal best_value, best_combo
        value, combo = result
        if best_combo is None or value < best_value - TIE_TOL * abs(best_value):
            best_value, best_combo = value, combo

    if workers == 1:
        for combos in _chunks(n_candidates, j):
            consider(_chunk_best(scorer, combos))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            wave: list[np.ndarray] = []
            for combos in _chunks(n_candidates, j):
                wave.append(combos)
                if len(wave) == workers:
                    for result in pool.map(lambda c: _chunk_best(scorer, c), wave):
                        consider(result)
                    wave = []
            for result in pool.map(lambda c: _chunk_best(scorer, c), wave):
                consider(result)
    return best_value, best_combo


def run_brute_force(
    g: Graph,
    cfg: LeaderConfig,
    k: int,
    cap: int | None = None,
    dense_cap: int | None = None,
    workers: int | None = None,
) -> SelectionResult:
    """
    Optimal k-subset of the candidates by exhaustive enumeration.

    The trajectory holds the optimum for every budget 0..k; a budget whose
    subset count exceeds the cap falls back to the value of the prefix of the
    budget-k optimum and is listed under params["prefix_budgets"].

    Raises:
        InputValidationError: k negative or above the candidate count
        CapacityError: C(|E_Q|, k) above the cap
    """
    cap = BRUTE_FORCE_CAP if cap is None else cap
    workers = WORKERS if workers is None else workers
    total = cfg.candidate_count
    if not 0 <= k <= total:
        raise InputValidationError(f"k={k} must lie in [0, {total}] (candidate count)")
    count = math.comb(total, k)
    if count > cap:
        raise CapacityError(f"C({total}, {k}) = {count} subsets exceed the brute-force cap of {cap}")

    setup_start = time.perf_counter()
    g_inv = dense_inverse(grounded_laplacian(g, cfg), dense_cap).inv
    scorer = _SubsetScorer(g_inv, cfg)
    setup_seconds = time.perf_counter() - setup_start

    start = time.perf_counter()
    value_k, combo_k = _optimum(scorer, total, k, workers)
    round_seconds = [time.perf_counter() - start]
    logger.info(f"Brute force: optimum over {count} subsets of size {k}: R_Q={value_k:.6g}")

    trajectory = []
    prefix_budgets = []
    for j in range(k):
        if math.comb(total, j) <= cap:
            trajectory.append(_optimum(scorer, total, j, workers)[0])
        else:
            trajectory.append(float(scorer.score(combo_k[None, :j])[0]))
            prefix_budgets.append(j)
    trajectory.append(value_k)

    chosen = [cfg.candidate_at(int(i)) for i in combo_k]
    return SelectionResult(
        chosen=chosen,
        trajectory=trajectory,
        round_seconds=[0.0] * (k - 1) + round_seconds if k else [],
        setup_seconds=setup_seconds,
        algorithm="brute-force",
        params={"subsets": count, "cap": cap, "prefix_budgets": prefix_budgets},
    )


def exact_polarization(g: Graph, cfg: LeaderConfig, dense_cap: int | None = None) -> float:
    """P_Q = Tr(L_Q^-1) / 2, dense only (CapacityError above the cap)."""
    return 0.5 * dense_inverse(grounded_laplacian(g, cfg), dense_cap).trace()
