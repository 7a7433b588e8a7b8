"""
Dense inverse of a grounded Laplacian and its rank-one maintenance.
"""
import logging
import os

import numpy as np
import scipy.linalg

from app.errors import CapacityError, InputValidationError, NumericalError
from app.modules.graph.grounded import GroundedSystem

logger = logging.getLogger(__name__)

DENSE_CAP = int(os.getenv("POLAR_DENSE_CAP", "30000"))
# Above this the O(dim^3) residual check costs as much as the inverse itself
RESIDUAL_CHECK_DIM = 2000
RESIDUAL_TOL = 1e-8
# Rows updated per chunk in sherman_morrison_update, bounds the temporary outer product
UPDATE_CHUNK = 1024


class DenseInverse:
    """Dense symmetric inverse of L(S)_Q, dim x dim."""

    def __init__(self, inv: np.ndarray):
        self.inv = inv

    @property
    def dim(self) -> int:
        return int(self.inv.shape[0])

    def trace(self) -> float:
        return float(np.trace(self.inv))

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.inv).copy()

    def column_norms_sq(self) -> np.ndarray:
        """||inv e_u||^2 for every follower index u."""
        return np.einsum("ij,ij->j", self.inv, self.inv)

    def copy(self) -> "DenseInverse":
        return DenseInverse(self.inv.copy())

    def __repr__(self) -> str:
        return f"<DenseInverse(dim={self.dim})>"


def check_dense_cap(dim: int, dense_cap: int | None = None) -> None:
    cap = DENSE_CAP if dense_cap is None else dense_cap
    if dim > cap:
        raise CapacityError(f"dense inverse of dimension {dim} exceeds the cap of {cap}")


def dense_inverse(sys: GroundedSystem, dense_cap: int | None = None) -> DenseInverse:
    """
    Invert L(S)_Q through a Cholesky factorization.

    Args:
        sys: Grounded system to invert
        dense_cap: Largest dimension allowed, defaults to POLAR_DENSE_CAP

    Returns:
        DenseInverse, exactly symmetric

    Raises:
        CapacityError: Dimension above the cap
        NumericalError: Factorization failed (matrix not positive definite)
    """
    check_dense_cap(sys.dim, dense_cap)
    matrix = sys.matrix.toarray()
    try:
        factor = scipy.linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Cholesky factorization failed for dim={sys.dim}", exc_info=True)
        raise NumericalError(f"grounded Laplacian is not positive definite: {e}") from e

    inv = scipy.linalg.cho_solve(factor, np.eye(sys.dim))
    inv = 0.5 * (inv + inv.T)

    if sys.dim <= RESIDUAL_CHECK_DIM:
        residual = float(np.max(np.abs(matrix @ inv - np.eye(sys.dim))))
        if not np.isfinite(residual):
            raise NumericalError("dense inverse contains non-finite entries")
        if residual > RESIDUAL_TOL:
            logger.warning(f"Dense inverse residual {residual:.3e} above {RESIDUAL_TOL:.0e} (ill-conditioned L_Q)")
    return DenseInverse(inv)


def sherman_morrison_update(invm: DenseInverse, u: int, w: float, inplace: bool = False) -> DenseInverse:
    """
    Inverse after bumping diagonal entry u by w.

    (A + w e_u e_u^T)^-1 = A^-1 - w A^-1 e_u e_u^T A^-1 / (1 + w (A^-1)_uu)

    The update is applied as scale * (col col^T) so the result stays exactly
    symmetric. Cost is O(dim^2).

    Raises:
        InputValidationError: u out of range or w not positive
    """
    if not 0 <= u < invm.dim:
        raise InputValidationError(f"follower index {u} out of range [0, {invm.dim})")
    if not w > 0:
        raise InputValidationError(f"bump weight must be positive, got {w}")

    target = invm if inplace else invm.copy()
    inv = target.inv
    col = inv[:, u].copy()
    scale = w / (1.0 + w * col[u])
    for start in range(0, target.dim, UPDATE_CHUNK):
        stop = min(start + UPDATE_CHUNK, target.dim)
        inv[start:stop] -= scale * np.outer(col[start:stop], col)
    return target
