"""
Sketched greedy: gain estimation through random projections and SDD solves.

For follower u the gain of a candidate (v, u, w) needs
    t(u) = ||L^-1 e_u||^2          estimated by sum_i (z1_i[u])^2, z1_i = L^-1 p_i
    r(u) = (L^-1)_uu               estimated by sum_i z2_i[u]^2 + z3_i[u]^2
with L = B'^T W' B' + X, z2_i = L^-1 B'^T W'^1/2 q_i and z3_i = L^-1 X^1/2 r_i,
where p_i, q_i, r_i are +-1/sqrt(p) probes. Probes are solved in fixed blocks
of POLAR_PROBE_BLOCK and folded into the accumulators in probe order, so the
result is the same for any worker count.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from app.errors import ConvergenceError, InputValidationError
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import GroundedSystem, add_candidate, grounded_laplacian
from app.modules.graph.leaders import LeaderConfig
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.schemas import ApproxParams, GainEstimate, SelectionResult
from app.modules.linalg.decomposition import SddDecomposition, sdd_decompose
from app.modules.linalg.sketch import probe_rng, random_signs
from app.modules.linalg.solver import SolveHandle, make_solve_handle, solve_block

logger = logging.getLogger(__name__)


class SketchAccumulators:
    """Per-follower running sums t_hat, r_hat after probes_done probes."""

    def __init__(self, dim: int):
        self.t_hat = np.zeros(dim)
        self.r_hat = np.zeros(dim)
        self.probes_done = 0
        self.solver_iterations = 0
        self.criteria: dict[str, int] = {}
        self.deltas: tuple[float, float] = (0.0, 0.0)  # (delta1, delta2) the solves ran with

    def fold(self, z1: np.ndarray | None, z2: np.ndarray, z3: np.ndarray) -> None:
        """Add one probe's solves; z1 is None when only the denominator is sketched."""
        if z1 is not None:
            self.t_hat += z1 * z1
        self.r_hat += z2 * z2 + z3 * z3
        self.probes_done += 1

    def trace_estimate(self) -> float:
        return float(self.r_hat.sum())

    def __repr__(self) -> str:
        return f"<SketchAccumulators(dim={self.t_hat.size}, probes_done={self.probes_done})>"


class _ProbeBlock:
    """Solved columns for probes [start, stop), each array dim x (stop - start)."""

    def __init__(self, start: int, z1: np.ndarray | None, z2: np.ndarray, z3: np.ndarray, iterations: int, criteria: list[str]):
        self.start = start
        self.z1 = z1
        self.z2 = z2
        self.z3 = z3
        self.iterations = iterations
        self.criteria = criteria


class _SketchContext:
    """Everything a worker needs to solve one probe block; read-only once built."""

    def __init__(self, sys: GroundedSystem, params: ApproxParams, round_index: int, numerator: bool):
        g = sys.graph
        self.dim = sys.dim
        self.p = params.p(g.n)
        self.seed = params.seed
        self.round_index = round_index
        self.numerator = numerator
        self.delta1, self.delta2 = params.deltas(g.n, sys.m, sys.w_min, sys.w_max)

        self.decomposition: SddDecomposition = sdd_decompose(sys)
        self.sqrt_w = self.decomposition.sqrt_weights()
        self.sqrt_x = self.decomposition.sqrt_diagonal()
        self.incidence_t = self.decomposition.incidence.T.tocsr()

        self.h2: SolveHandle = make_solve_handle(sys, self.delta2, params.preconditioner, params.strict)
        if not numerator:
            self.h1 = None
        elif self.delta1 == self.delta2:
            self.h1 = self.h2
        else:
            self.h1 = make_solve_handle(sys, self.delta1, params.preconditioner, params.strict)

    def probe_columns(self, start: int, stop: int) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
        """Right-hand sides of the three solves for every probe in the block."""
        width = stop - start
        rhs1 = np.empty((self.dim, width)) if self.numerator else None
        rhs2 = np.zeros((self.dim, width))
        rhs3 = np.empty((self.dim, width))
        edges = self.decomposition.edge_count
        for j, i in enumerate(range(start, stop)):
            if rhs1 is not None:
                rhs1[:, j] = random_signs(self.dim, self.p, probe_rng(self.seed, self.round_index, i, "node"))
            if edges:
                q = random_signs(edges, self.p, probe_rng(self.seed, self.round_index, i, "edge"))
                rhs2[:, j] = self.incidence_t @ (self.sqrt_w * q)
            r = random_signs(self.dim, self.p, probe_rng(self.seed, self.round_index, i, "diagonal"))
            rhs3[:, j] = self.sqrt_x * r
        return rhs1, rhs2, rhs3

    def solve(self, start: int, stop: int) -> _ProbeBlock:
        rhs1, rhs2, rhs3 = self.probe_columns(start, stop)
        try:
            out2 = solve_block(self.h2, rhs2)
            out3 = solve_block(self.h2, rhs3)
            out1 = solve_block(self.h1, rhs1) if rhs1 is not None else None
        except ConvergenceError as e:
            raise e.at_probe(start + (e.probe_index or 0)) from e

        outcomes = [o for o in (out1, out2, out3) if o is not None]
        iterations = int(sum(int(o.iterations.sum()) for o in outcomes))
        criteria = [c for o in outcomes for c in o.criteria]
        return _ProbeBlock(start, out1.x if out1 is not None else None, out2.x, out3.x, iterations, criteria)


def _probe_blocks(p: int, block: int) -> list[tuple[int, int]]:
    return [(start, min(start + block, p)) for start in range(0, p, block)]


def _run_blocks(ctx: _SketchContext, params: ApproxParams, on_block) -> None:
    """Solve probe blocks, possibly in parallel, and hand them to on_block in probe order."""
    blocks = _probe_blocks(ctx.p, params.probe_block)
    if params.workers == 1:
        for start, stop in blocks:
            on_block(ctx.solve(start, stop))
        return
    # Waves of `workers` blocks bound the number of solved blocks held in memory
    with ThreadPoolExecutor(max_workers=params.workers) as pool:
        for wave_start in range(0, len(blocks), params.workers):
            wave = blocks[wave_start:wave_start + params.workers]
            for solved in pool.map(lambda span: ctx.solve(*span), wave):
                on_block(solved)


def _fold_block(acc: SketchAccumulators, solved: _ProbeBlock) -> None:
    for j in range(solved.z2.shape[1]):
        z1 = solved.z1[:, j] if solved.z1 is not None else None
        acc.fold(z1, solved.z2[:, j], solved.z3[:, j])
    acc.solver_iterations += solved.iterations
    for c in solved.criteria:
        acc.criteria[c] = acc.criteria.get(c, 0) + 1


def accumulate(
    sys: GroundedSystem,
    params: ApproxParams,
    round_index: int = 0,
    numerator: bool = True,
) -> SketchAccumulators:
    """
    Streamed sketch: three solves per probe, folded into t_hat and r_hat.

    Args:
        sys: Current grounded system
        params: Sketch parameters (epsilon, seed, workers, ...)
        round_index: Greedy round, part of every probe's random stream key
        numerator: Also sketch t(u); off for trace-only estimates

    Raises:
        ConvergenceError: A solve hit its cap; carries the probe index
    """
    ctx = _SketchContext(sys, params, round_index, numerator)
    acc = SketchAccumulators(sys.dim)
    acc.deltas = (ctx.delta1, ctx.delta2)
    _run_blocks(ctx, params, lambda solved: _fold_block(acc, solved))
    return acc


def _estimates(cfg: LeaderConfig, t_hat: np.ndarray, r_hat: np.ndarray, positions: np.ndarray) -> list[GainEstimate]:
    idx = cfg.cand_index[positions]
    w = cfg.cand_weights[positions]
    gains = w * t_hat[idx] / (1.0 + w * r_hat[idx])
    return [
        GainEstimate(edge=cfg.candidate_at(int(pos)), t_u=float(t_hat[i]), r_u=float(r_hat[i]), gain=float(gain))
        for pos, i, gain in zip(positions, idx, gains)
    ]


def _positions_for(cfg: LeaderConfig, candidates: Sequence[CandidateEdge] | None) -> np.ndarray:
    if candidates is None:
        return np.arange(cfg.candidate_count)
    positions = []
    for edge in candidates:
        pos = cfg.position_of(edge)
        if pos is None:
            raise InputValidationError(f"edge {edge.leader}-{edge.follower} is not a candidate")
        positions.append(pos)
    return np.asarray(positions, dtype=np.int64)


def gains_est(
    sys: GroundedSystem,
    params: ApproxParams,
    candidates: Sequence[CandidateEdge] | None = None,
    round_index: int = 0,
) -> list[GainEstimate]:
    """
    Sketched gains from fully materialized p x dim projections.

    Solves every probe first and keeps the three projected matrices, then
    scores candidates from them. Same probes and the same summation order as
    f_gains_est, so both return identical numbers; this variant holds
    O(p * dim) memory and exists as the reference for the streamed one.
    """
    ctx = _SketchContext(sys, params, round_index, numerator=True)
    z1_rows = np.empty((ctx.p, sys.dim))
    z2_rows = np.empty((ctx.p, sys.dim))
    z3_rows = np.empty((ctx.p, sys.dim))

    def store(solved: _ProbeBlock) -> None:
        stop = solved.start + solved.z2.shape[1]
        z1_rows[solved.start:stop] = solved.z1.T
        z2_rows[solved.start:stop] = solved.z2.T
        z3_rows[solved.start:stop] = solved.z3.T

    _run_blocks(ctx, params, store)

    t_hat = np.zeros(sys.dim)
    r_hat = np.zeros(sys.dim)
    for i in range(ctx.p):
        t_hat += z1_rows[i] * z1_rows[i]
        r_hat += z2_rows[i] * z2_rows[i] + z3_rows[i] * z3_rows[i]
    return _estimates(sys.config, t_hat, r_hat, _positions_for(sys.config, candidates))


def f_gains_est(
    sys: GroundedSystem,
    params: ApproxParams,
    candidates: Sequence[CandidateEdge] | None = None,
    round_index: int = 0,
) -> list[GainEstimate]:
    """Sketched gains for every candidate (all of E_Q by default), streaming the probes."""
    acc = accumulate(sys, params, round_index)
    return _estimates(sys.config, acc.t_hat, acc.r_hat, _positions_for(sys.config, candidates))


def sketched_trace(sys: GroundedSystem, params: ApproxParams, round_index: int = 0) -> float:
    """Estimate of Tr(L(S)_Q^-1) as the sum of the denominator accumulators."""
    return accumulate(sys, params, round_index, numerator=False).trace_estimate()


def run_approx(g: Graph, cfg: LeaderConfig, k: int, params: ApproxParams | None = None) -> SelectionResult:
    """
    Greedy selection with sketched gains.

    Each round sketches t and r for the current L(S)_Q, takes the candidate
    with the largest estimated gain (ties to the smallest (follower, leader))
    and bumps its follower's diagonal. The trajectory holds the sketched
    trace of every intermediate system.

    Raises:
        InputValidationError: k negative or larger than the candidate set
        ConvergenceError: A solve failed; carries the probe index
    """
    params = params or ApproxParams()
    if not 0 <= k <= cfg.candidate_count:
        raise InputValidationError(f"k={k} must lie in [0, {cfg.candidate_count}] (candidate count)")

    setup_start = time.perf_counter()
    sys = grounded_laplacian(g, cfg)
    setup_seconds = time.perf_counter() - setup_start

    p = params.p(g.n)
    logger.info(f"Approx greedy: dim={sys.dim}, candidates={cfg.candidate_count}, k={k}, eps={params.epsilon}, p={p}")

    available = np.ones(cfg.candidate_count, dtype=bool)
    chosen: list[CandidateEdge] = []
    trajectory: list[float] = []
    round_seconds: list[float] = []
    iterations = 0
    criteria: dict[str, int] = {}
    deltas: list[tuple[float, float]] = []

    for round_index in range(k):
        start = time.perf_counter()
        acc = accumulate(sys, params, round_index)
        trajectory.append(acc.trace_estimate())
        deltas.append(acc.deltas)

        w = cfg.cand_weights
        gains = w * acc.t_hat[cfg.cand_index] / (1.0 + w * acc.r_hat[cfg.cand_index])
        best = int(np.argmax(np.where(available, gains, -np.inf)))
        available[best] = False
        edge = cfg.candidate_at(best)
        chosen.append(edge)
        sys = add_candidate(sys, edge)

        iterations += acc.solver_iterations
        for c, count in acc.criteria.items():
            criteria[c] = criteria.get(c, 0) + count
        round_seconds.append(time.perf_counter() - start)
        logger.info(
            f"Approx round {round_index + 1}/{k}: edge {edge.leader}-{edge.follower}, "
            f"est. gain {gains[best]:.6g}, {round_seconds[-1]:.2f}s"
        )

    start = time.perf_counter()
    final = accumulate(sys, params, k, numerator=False)
    trajectory.append(final.trace_estimate())
    deltas.append(final.deltas)
    iterations += final.solver_iterations
    for c, count in final.criteria.items():
        criteria[c] = criteria.get(c, 0) + count
    elapsed = time.perf_counter() - start
    if round_seconds:
        round_seconds[-1] += elapsed
    else:
        setup_seconds += elapsed

    return SelectionResult(
        chosen=chosen,
        trajectory=trajectory,
        round_seconds=round_seconds,
        setup_seconds=setup_seconds,
        algorithm="approx",
        params={
            "epsilon": params.epsilon,
            "p": p,
            "delta_mode": params.delta_mode,
            "delta1": [d1 for d1, _ in deltas],  # per round, from the augmented system
            "delta2": [d2 for _, d2 in deltas],
            "seed": params.seed,
            "preconditioner": params.preconditioner,
            "solver_iterations": iterations,
            "criteria": criteria,
        },
        trace_method="sketched",
    )
