"""
Split L(S)_Q into a follower-graph Laplacian plus a nonnegative diagonal.

    L(S)_Q = B'^T W' B' + X

B' is the incidence matrix of edges with both endpoints among the followers
(+1 at the lower follower index), W' their weights, and X the conductance of
each follower into Q plus its accumulated bump.
"""
import numpy as np
import scipy.sparse as sp

from app.modules.graph.grounded import GroundedSystem


class SddDecomposition:
    def __init__(self, incidence: sp.csr_matrix, weights: np.ndarray, diagonal: np.ndarray):
        self.incidence = incidence
        self.weights = weights
        self.diagonal = diagonal

    @property
    def edge_count(self) -> int:
        return int(self.weights.size)

    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def sqrt_diagonal(self) -> np.ndarray:
        return np.sqrt(self.diagonal)

    def reassemble(self) -> sp.csr_matrix:
        """B'^T W' B' + X."""
        weighted = sp.diags(self.weights) @ self.incidence
        return (self.incidence.T @ weighted + sp.diags(self.diagonal)).tocsr()


def sdd_decompose(sys: GroundedSystem) -> SddDecomposition:
    g, cfg = sys.graph, sys.config
    head_idx = cfg.index_of[g.heads]
    tail_idx = cfg.index_of[g.tails]
    inner = (head_idx >= 0) & (tail_idx >= 0)
    a = np.minimum(head_idx[inner], tail_idx[inner])
    b = np.maximum(head_idx[inner], tail_idx[inner])
    rows = np.arange(a.size)

    incidence = sp.csr_matrix(
        (np.concatenate([np.ones(a.size), -np.ones(a.size)]), (np.concatenate([rows, rows]), np.concatenate([a, b]))),
        shape=(a.size, cfg.dim),
    )
    return SddDecomposition(incidence, g.weights[inner].copy(), sys.leader_conductance + sys.diag_bump)
