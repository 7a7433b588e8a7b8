"""
Grounded Laplacian L(S)_Q and its incremental maintenance.

Adding a leader-follower edge (v, u) with weight w only changes the diagonal
entry of follower u by +w, so a GroundedSystem keeps the base matrix L_Q and a
per-follower bump vector; the current matrix is their sum.
"""
import logging

import numpy as np
import scipy.sparse as sp

from app.errors import DuplicateCandidateError, InputValidationError
from app.modules.graph.graph import Graph
from app.modules.graph.leaders import LeaderConfig
from app.modules.graph.schemas import CandidateEdge

logger = logging.getLogger(__name__)


class GroundedSystem:
    """
    L(S)_Q = L_Q + sum over S of w(e) E_uu, rows and columns in follower order.

    Instances are never mutated; add_candidate and remove_candidate return new
    systems sharing the base matrix.
    """

    def __init__(
        self,
        graph: Graph,
        config: LeaderConfig,
        base_matrix: sp.csr_matrix,
        added: tuple[CandidateEdge, ...] = (),
        diag_bump: np.ndarray | None = None,
        leader_conductance: np.ndarray | None = None,
    ):
        self.graph = graph
        self.config = config
        self.base_matrix = base_matrix
        self.added = tuple(added)
        self.diag_bump = np.zeros(config.dim) if diag_bump is None else diag_bump
        if leader_conductance is None:
            to_leaders = graph.adjacency[config.followers][:, config.leaders]
            leader_conductance = np.asarray(to_leaders.sum(axis=1)).ravel()
        self.leader_conductance = leader_conductance
        self._matrix: sp.csr_matrix | None = None

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            if self.added:
                self._matrix = (self.base_matrix + sp.diags(self.diag_bump)).tocsr()
            else:
                self._matrix = self.base_matrix
        return self._matrix

    @property
    def diagonal(self) -> np.ndarray:
        return self.base_matrix.diagonal() + self.diag_bump

    @property
    def w_min(self) -> float:
        """Smallest edge weight of the augmented graph (E plus S)."""
        weights = [self.graph.w_min] + [e.weight for e in self.added]
        return float(min(weights))

    @property
    def w_max(self) -> float:
        weights = [self.graph.w_max] + [e.weight for e in self.added]
        return float(max(weights))

    @property
    def m(self) -> int:
        """Edge count of the augmented graph."""
        return self.graph.m + len(self.added)

    def __repr__(self) -> str:
        return f"<GroundedSystem(dim={self.dim}, added={len(self.added)})>"


def grounded_laplacian(g: Graph, cfg: LeaderConfig) -> GroundedSystem:
    """
    Assemble L_Q for a connected graph with S empty.

    Raises:
        InputValidationError: Disconnected graph or a config built for another graph
    """
    if cfg.n != g.n:
        raise InputValidationError(f"leader config is for {cfg.n} vertices, graph has {g.n}")
    if not g.is_connected():
        raise InputValidationError("graph must be connected for L_Q to be positive definite")

    lap = g.laplacian()
    base = lap[cfg.followers][:, cfg.followers].tocsr()
    base.sort_indices()
    logger.debug(f"Grounded Laplacian: dim={cfg.dim}, nnz={base.nnz}")
    return GroundedSystem(g, cfg, base)


def _bump_for(cfg: LeaderConfig, added: tuple[CandidateEdge, ...]) -> np.ndarray:
    bump = np.zeros(cfg.dim)
    for edge in added:
        bump[cfg.index_of[edge.follower]] += edge.weight
    return bump


def add_candidate(sys: GroundedSystem, e: CandidateEdge) -> GroundedSystem:
    """
    Accept candidate e into S.

    Raises:
        InputValidationError: e is not in the candidate set
        DuplicateCandidateError: e was already added
    """
    if sys.config.position_of(e) is None:
        raise InputValidationError(f"edge {e.leader}-{e.follower} (w={e.weight}) is not a candidate")
    if any(a.leader == e.leader and a.follower == e.follower for a in sys.added):
        raise DuplicateCandidateError(f"edge {e.leader}-{e.follower} already added")

    bump = sys.diag_bump.copy()
    bump[sys.config.index_of[e.follower]] += e.weight
    return GroundedSystem(
        sys.graph, sys.config, sys.base_matrix, sys.added + (e,), bump, sys.leader_conductance
    )


def remove_candidate(sys: GroundedSystem, e: CandidateEdge) -> GroundedSystem:
    """
    Drop e from S, rebuilding the bump from the remaining edges in insertion order.

    Removing the most recent addition restores the previous system bit for bit.

    Raises:
        InputValidationError: e is not in S
    """
    remaining = tuple(a for a in sys.added if not (a.leader == e.leader and a.follower == e.follower))
    if len(remaining) == len(sys.added):
        raise InputValidationError(f"edge {e.leader}-{e.follower} is not in the added set")
    return GroundedSystem(
        sys.graph,
        sys.config,
        sys.base_matrix,
        remaining,
        _bump_for(sys.config, remaining),
        sys.leader_conductance,
    )


def apply_edges(sys: GroundedSystem, edges: list[CandidateEdge]) -> GroundedSystem:
    """Add a sequence of candidates in order."""
    for edge in edges:
        sys = add_candidate(sys, edge)
    return sys
