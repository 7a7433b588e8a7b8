"""
SDD solver: preconditioned conjugate gradient with an energy-norm stopping rule.

For S positive definite with eigenvalues in [lambda_lower, lambda_upper]:
    ||x - S^-1 b||_S <= ||r||_2 / sqrt(lambda_lower)
    ||S^-1 b||_S     >= ||b||_2 / sqrt(lambda_upper)
so ||r|| / ||b|| <= delta * sqrt(lambda_lower / lambda_upper) guarantees the
relative S-norm error is at most delta. lambda_lower = w_min / n^2 and the
Gershgorin radius give the bounds. The energy rule is strict; unless the
handle is strict, a relative residual <= delta also stops the iteration, and
every outcome records which rule fired.

Several right-hand sides are solved together as columns of one block; each
column follows its own CG recurrence and stops on its own.
"""
import logging
import os
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from app.errors import ConvergenceError, InputValidationError, NumericalError
from app.modules.graph.grounded import GroundedSystem

logger = logging.getLogger(__name__)

SOLVER_MAX_ITER = int(os.getenv("POLAR_SOLVER_MAX_ITER", "20000"))
PRECONDITIONERS = ("jacobi", "ilu")
# Recompute the true residual every this many iterations to curb drift
RESIDUAL_REFRESH = 50

CRITERION_ENERGY = "energy"
CRITERION_RESIDUAL = "residual"


class SolveOutcome:
    """Result of a block solve: solutions as columns plus per-column diagnostics."""

    def __init__(self, x: np.ndarray, iterations: np.ndarray, residual: np.ndarray, criteria: list[str]):
        self.x = x
        self.iterations = iterations
        self.residual = residual
        self.criteria = criteria

    def __repr__(self) -> str:
        return (
            f"<SolveOutcome(columns={len(self.criteria)}, max_iter={int(self.iterations.max(initial=0))}, "
            f"max_residual={float(self.residual.max(initial=0.0)):.2e})>"
        )


def gershgorin_upper(matrix: sp.csr_matrix) -> float:
    return float(np.asarray(abs(matrix).sum(axis=1)).max())


def _jacobi(matrix: sp.csr_matrix) -> Callable[[np.ndarray], np.ndarray]:
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise NumericalError("nonpositive diagonal entry, matrix is not SDD positive definite")
    inv_diag = (1.0 / diag)[:, None]
    return lambda r: inv_diag * r


def _ilu(matrix: sp.csr_matrix) -> Callable[[np.ndarray], np.ndarray]:
    try:
        factor = spla.spilu(
            matrix.tocsc(), drop_tol=1e-4, fill_factor=10, permc_spec="NATURAL", diag_pivot_thresh=0.0
        )
    except RuntimeError as e:
        logger.error("Incomplete LU factorization failed", exc_info=True)
        raise NumericalError(f"incomplete LU failed: {e}") from e
    return factor.solve


class SolveHandle:
    """
    Immutable solver state for one SDD matrix; safe to share between threads.

    Attributes:
        matrix: The system S (csr)
        delta: Requested relative S-norm accuracy
        strict: Only the energy rule may stop the iteration early
        lambda_lower, lambda_upper: Eigenvalue bounds used by the energy rule
        max_iter: Iteration cap per column
    """

    def __init__(
        self,
        matrix: sp.csr_matrix,
        delta: float,
        lambda_lower: float,
        preconditioner: str = "jacobi",
        strict: bool = False,
        max_iter: int | None = None,
    ):
        if not 0 < delta < 1:
            raise InputValidationError(f"solver accuracy delta must lie in (0, 1), got {delta}")
        if preconditioner not in PRECONDITIONERS:
            raise InputValidationError(f"unknown preconditioner {preconditioner!r}, expected one of {PRECONDITIONERS}")
        if not lambda_lower > 0:
            raise InputValidationError("eigenvalue lower bound must be positive")

        self.matrix = matrix.tocsr()
        self.dim = int(self.matrix.shape[0])
        self.delta = float(delta)
        self.strict = strict
        self.preconditioner = preconditioner
        self.lambda_lower = float(lambda_lower)
        self.lambda_upper = max(gershgorin_upper(self.matrix), self.lambda_lower)
        self.energy_tol = self.delta * np.sqrt(self.lambda_lower / self.lambda_upper)
        if max_iter is None:
            max_iter = min(max(200, 4 * self.dim), SOLVER_MAX_ITER)
        self.max_iter = int(max_iter)
        self._apply_precond = _jacobi(self.matrix) if preconditioner == "jacobi" else _ilu(self.matrix)

    def __repr__(self) -> str:
        return f"<SolveHandle(dim={self.dim}, delta={self.delta:.2e}, precond={self.preconditioner})>"


def make_solve_handle(
    sys: GroundedSystem,
    delta: float,
    preconditioner: str = "jacobi",
    strict: bool = False,
    max_iter: int | None = None,
) -> SolveHandle:
    """Solver for the current L(S)_Q, eigenvalue floor w_min / n^2 of the augmented graph."""
    n = sys.graph.n
    lambda_lower = sys.w_min / (n * n)
    return SolveHandle(sys.matrix, delta, lambda_lower, preconditioner, strict, max_iter)


def solve_block(h: SolveHandle, b: np.ndarray) -> SolveOutcome:
    """
    Solve S X = B column by column with preconditioned CG.

    Zero columns return zero with zero iterations.

    Raises:
        InputValidationError: Shape mismatch
        ConvergenceError: A column hit the iteration cap with relative residual
                          above delta; probe_index holds the failing column
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] != h.dim:
        raise InputValidationError(f"right-hand side has {b.shape[0]} rows, system has {h.dim}")

    cols = b.shape[1]
    b_norm = np.linalg.norm(b, axis=0)
    x = np.zeros_like(b)
    iterations = np.zeros(cols, dtype=np.int64)
    residual = np.zeros(cols)
    criteria = [CRITERION_ENERGY] * cols

    active = np.flatnonzero(b_norm > 0)
    if active.size == 0:
        return SolveOutcome(x, iterations, residual, criteria)

    r = b[:, active].copy()
    z = h._apply_precond(r)
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    xa = np.zeros_like(r)
    bn = b_norm[active]

    for it in range(1, h.max_iter + 1):
        s_p = h.matrix @ p
        pap = np.einsum("ij,ij->j", p, s_p)
        if np.any(pap <= 0):
            raise NumericalError("CG curvature p^T S p <= 0, matrix is not positive definite")
        alpha = rz / pap
        xa += alpha * p
        if it % RESIDUAL_REFRESH == 0:
            r = b[:, active] - h.matrix @ xa
        else:
            r -= alpha * s_p

        rel = np.linalg.norm(r, axis=0) / bn
        energy_done = rel <= h.energy_tol
        residual_done = (rel <= h.delta) & (not h.strict)
        done = energy_done | residual_done
        if np.any(done):
            for local in np.flatnonzero(done):
                col = active[local]
                x[:, col] = xa[:, local]
                iterations[col] = it
                residual[col] = rel[local]
                criteria[col] = CRITERION_ENERGY if energy_done[local] else CRITERION_RESIDUAL
            keep = ~done
            if not np.any(keep):
                return SolveOutcome(x, iterations, residual, criteria)
            active, r, xa, p, bn = active[keep], r[:, keep], xa[:, keep], p[:, keep], bn[keep]
            z = h._apply_precond(r)
            rz_new = np.einsum("ij,ij->j", r, z)
            beta = rz_new / rz[keep]
        else:
            z = h._apply_precond(r)
            rz_new = np.einsum("ij,ij->j", r, z)
            beta = rz_new / rz
        rz = rz_new
        p = z + beta * p

    # Cap reached; accept columns that meet the residual rule, fail otherwise
    rel = np.linalg.norm(b[:, active] - h.matrix @ xa, axis=0) / bn
    worst = int(np.argmax(rel))
    if rel[worst] > h.delta:
        raise ConvergenceError(float(rel[worst]), h.max_iter, probe_index=int(active[worst]))
    logger.warning(
        f"CG reached {h.max_iter} iterations without the energy bound; "
        f"{active.size} column(s) accepted on relative residual <= {h.delta:.1e}"
    )
    for local, col in enumerate(active):
        x[:, col] = xa[:, local]
        iterations[col] = h.max_iter
        residual[col] = rel[local]
        criteria[col] = CRITERION_RESIDUAL
    return SolveOutcome(x, iterations, residual, criteria)


def sdd_solve(h: SolveHandle, b: np.ndarray) -> np.ndarray:
    """Approximate S^-1 b within the handle's accuracy contract."""
    b = np.asarray(b, dtype=np.float64)
    outcome = solve_block(h, b)
    return outcome.x[:, 0] if b.ndim == 1 else outcome.x
