"""
Leader configuration: the leader set Q, the candidate set E_Q and the follower ordering.

Followers are indexed in ascending vertex id; that index is the row/column
order of every grounded matrix. Candidates are kept as parallel numpy arrays
sorted by (follower, leader) so vectorized scoring and tie-breaking agree; the
CandidateEdge list is materialized lazily for callers that want objects.
"""
import logging
from typing import Iterable, Sequence

import numpy as np

from app.errors import InputValidationError
from app.modules.graph.graph import Graph
from app.modules.graph.schemas import CandidateEdge

logger = logging.getLogger(__name__)


class LeaderConfig:
    """
    Immutable leader set plus candidate edges.

    Attributes:
        n: Vertex count of the underlying graph
        leaders: Sorted leader ids
        followers: Sorted follower ids (follower index -> vertex id)
        index_of: Vertex id -> follower index, -1 for leaders
        cand_leaders, cand_followers, cand_weights: Candidate arrays in (follower, leader) order
        cand_index: Follower index of every candidate
    """

    def __init__(
        self,
        n: int,
        leaders: np.ndarray,
        cand_leaders: np.ndarray,
        cand_followers: np.ndarray,
        cand_weights: np.ndarray,
    ):
        self.n = n
        self.leaders = np.asarray(leaders, dtype=np.int64)
        mask = np.ones(n, dtype=bool)
        mask[self.leaders] = False
        self.followers = np.flatnonzero(mask)
        self.index_of = np.full(n, -1, dtype=np.int64)
        self.index_of[self.followers] = np.arange(self.followers.size)

        order = np.lexsort((cand_leaders, cand_followers))
        self.cand_leaders = np.asarray(cand_leaders, dtype=np.int64)[order]
        self.cand_followers = np.asarray(cand_followers, dtype=np.int64)[order]
        self.cand_weights = np.asarray(cand_weights, dtype=np.float64)[order]
        self.cand_index = self.index_of[self.cand_followers]

        self._candidates: list[CandidateEdge] | None = None
        self._positions: dict[tuple[int, int], int] | None = None

    @property
    def q(self) -> int:
        return int(self.leaders.size)

    @property
    def dim(self) -> int:
        """Order of the grounded matrix, n - q."""
        return int(self.followers.size)

    @property
    def candidate_count(self) -> int:
        return int(self.cand_leaders.size)

    @property
    def candidates(self) -> list[CandidateEdge]:
        if self._candidates is None:
            self._candidates = [
                CandidateEdge(leader=int(l), follower=int(f), weight=float(w))
                for l, f, w in zip(self.cand_leaders, self.cand_followers, self.cand_weights)
            ]
        return self._candidates

    def candidate_at(self, position: int) -> CandidateEdge:
        return CandidateEdge(
            leader=int(self.cand_leaders[position]),
            follower=int(self.cand_followers[position]),
            weight=float(self.cand_weights[position]),
        )

    def position_of(self, edge: CandidateEdge) -> int | None:
        """Position of edge in the candidate arrays, None if it is not a candidate."""
        if self._positions is None:
            self._positions = {
                (int(l), int(f)): i for i, (l, f) in enumerate(zip(self.cand_leaders, self.cand_followers))
            }
        position = self._positions.get((edge.leader, edge.follower))
        if position is None or self.cand_weights[position] != edge.weight:
            return None
        return position

    def follower_index(self, vertex: int) -> int:
        index = int(self.index_of[vertex])
        if index < 0:
            raise InputValidationError(f"vertex {vertex} is a leader, not a follower")
        return index

    def follower_vertex(self, index: int) -> int:
        return int(self.followers[index])

    def __repr__(self) -> str:
        return f"<LeaderConfig(q={self.q}, followers={self.dim}, candidates={self.candidate_count})>"


def _checked_leaders(g: Graph, leaders: Iterable[int]) -> np.ndarray:
    leader_arr = np.unique(np.asarray(list(leaders), dtype=np.int64))
    if leader_arr.size == 0:
        raise InputValidationError("leader set Q must be nonempty")
    if leader_arr.min() < 0 or leader_arr.max() >= g.n:
        raise InputValidationError(f"leader ids must lie in [0, {g.n})")
    if leader_arr.size >= g.n:
        raise InputValidationError("leader set Q must leave at least one follower")
    return leader_arr


def _universe_arrays(g: Graph, leaders: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    is_leader = np.zeros(g.n, dtype=bool)
    is_leader[leaders] = True
    cand_l: list[np.ndarray] = []
    cand_f: list[np.ndarray] = []
    for leader in leaders:
        eligible = ~is_leader
        neighbor_ids, _ = g.neighbors(int(leader))
        eligible[neighbor_ids] = False
        followers = np.flatnonzero(eligible)
        cand_f.append(followers)
        cand_l.append(np.full(followers.size, leader, dtype=np.int64))
    if not cand_l:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(cand_l), np.concatenate(cand_f)


def make_leader_config(
    g: Graph,
    leaders: Iterable[int],
    candidates: Sequence[CandidateEdge] | None = None,
    weight: float = 1.0,
) -> LeaderConfig:
    """
    Validate a leader set and its candidate edges.

    When candidates is None the full universe of nonexistent leader-follower
    pairs is used, each with the given weight.

    Raises:
        InputValidationError: Empty or full Q, a candidate not joining Q to
                              V \\ Q, a candidate duplicating an existing edge
                              or another candidate
    """
    leader_arr = _checked_leaders(g, leaders)
    if candidates is None:
        if weight <= 0:
            raise InputValidationError("candidate weight must be positive")
        cand_l, cand_f = _universe_arrays(g, leader_arr)
        return LeaderConfig(g.n, leader_arr, cand_l, cand_f, np.full(cand_l.size, float(weight)))

    is_leader = np.zeros(g.n, dtype=bool)
    is_leader[leader_arr] = True
    seen: set[tuple[int, int]] = set()
    for edge in candidates:
        if edge.leader >= g.n or edge.follower >= g.n:
            raise InputValidationError(f"candidate {edge.leader}-{edge.follower} references an unknown vertex")
        if not is_leader[edge.leader]:
            raise InputValidationError(f"candidate {edge.leader}-{edge.follower}: {edge.leader} is not a leader")
        if is_leader[edge.follower]:
            raise InputValidationError(f"candidate {edge.leader}-{edge.follower}: {edge.follower} is not a follower")
        if g.has_edge(edge.leader, edge.follower):
            raise InputValidationError(f"candidate {edge.leader}-{edge.follower} duplicates an existing edge")
        if (edge.leader, edge.follower) in seen:
            raise InputValidationError(f"candidate {edge.leader}-{edge.follower} listed twice")
        seen.add((edge.leader, edge.follower))

    return LeaderConfig(
        g.n,
        leader_arr,
        np.array([e.leader for e in candidates], dtype=np.int64),
        np.array([e.follower for e in candidates], dtype=np.int64),
        np.array([e.weight for e in candidates], dtype=np.float64),
    )


def candidate_universe(g: Graph, leaders: Iterable[int], weight: float = 1.0) -> list[CandidateEdge]:
    """
    All nonexistent (leader, follower) pairs with the given weight.

    Returned in (follower id, leader id) ascending order.
    """
    if weight <= 0:
        raise InputValidationError("candidate weight must be positive")
    return make_leader_config(g, leaders, weight=weight).candidates


def sample_leaders(g: Graph, q: int, seed: int | np.random.SeedSequence) -> list[int]:
    """Uniformly sample q distinct leaders, reproducibly from seed."""
    if not 1 <= q < g.n:
        raise InputValidationError(f"q must lie in [1, {g.n - 1}], got {q}")
    rng = np.random.default_rng(seed)
    return sorted(int(v) for v in rng.choice(g.n, size=q, replace=False))
