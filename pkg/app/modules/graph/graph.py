"""
Weighted undirected graph, edge-list ingestion and component extraction.

Graphs arrive as KONECT/SNAP style text edge lists ("u v [w]" per line, comment
lines starting with '#' or '%'). Loading normalizes dirty data:
- self-loops are dropped
- duplicate unordered pairs are merged by summing their weights
- vertex ids are compacted to [0, n) in ascending order of the original ids

The original ids are kept in Graph.labels so results can be reported in the
file's own numbering.
"""
import logging
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from app.errors import EdgeListParseError, InputValidationError

logger = logging.getLogger(__name__)

DEFAULT_COMMENT_PREFIXES = ("#", "%")


class Graph:
    """
    Immutable weighted undirected graph with contiguous vertex ids.

    Edges are stored once per unordered pair with head < tail. The symmetric
    adjacency matrix is built eagerly since every consumer needs it.
    """

    def __init__(
        self,
        n: int,
        heads: np.ndarray,
        tails: np.ndarray,
        weights: np.ndarray,
        labels: np.ndarray | None = None,
    ):
        heads = np.asarray(heads, dtype=np.int64)
        tails = np.asarray(tails, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)

        if not (heads.shape == tails.shape == weights.shape):
            raise InputValidationError("edge arrays must have equal length")
        if n < 0:
            raise InputValidationError("vertex count must be nonnegative")
        if heads.size:
            if heads.min() < 0 or tails.max() >= n or heads.max() >= n or tails.min() < 0:
                raise InputValidationError(f"vertex ids must lie in [0, {n})")
            if np.any(heads >= tails):
                raise InputValidationError("edges must be stored with head < tail (no self-loops)")
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise InputValidationError("edge weights must be finite and strictly positive")
            pair_keys = heads * n + tails
            if np.unique(pair_keys).size != pair_keys.size:
                raise InputValidationError("at most one edge per unordered pair")

        self.n = int(n)
        self.heads = heads
        self.tails = tails
        self.weights = weights
        self.labels = (
            np.arange(self.n, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
        )
        if self.labels.shape != (self.n,):
            raise InputValidationError("labels must hold one original id per vertex")

        rows = np.concatenate([heads, tails])
        cols = np.concatenate([tails, heads])
        vals = np.concatenate([weights, weights])
        self.adjacency = sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        self.degree = np.asarray(self.adjacency.sum(axis=1)).ravel()

    @classmethod
    def from_edges(
        cls,
        us: Iterable[int] | np.ndarray,
        vs: Iterable[int] | np.ndarray,
        ws: Iterable[float] | np.ndarray | None = None,
        n: int | None = None,
        labels: np.ndarray | None = None,
    ) -> "Graph":
        """
        Build a graph from raw endpoint arrays, normalizing them first.

        Self-loops are dropped and duplicate unordered pairs merged by summing.
        Ids must already be compact; use load_edge_list for arbitrary ids.
        """
        us = np.asarray(list(us) if not isinstance(us, np.ndarray) else us, dtype=np.int64)
        vs = np.asarray(list(vs) if not isinstance(vs, np.ndarray) else vs, dtype=np.int64)
        if ws is None:
            ws = np.ones(us.shape, dtype=np.float64)
        else:
            ws = np.asarray(list(ws) if not isinstance(ws, np.ndarray) else ws, dtype=np.float64)
        if n is None:
            n = int(max(us.max(initial=-1), vs.max(initial=-1)) + 1)
        if ws.size and (not np.all(np.isfinite(ws)) or np.any(ws <= 0)):
            raise InputValidationError("edge weights must be finite and strictly positive")

        keep = us != vs
        lo = np.minimum(us[keep], vs[keep])
        hi = np.maximum(us[keep], vs[keep])
        merged = sp.coo_matrix((ws[keep], (lo, hi)), shape=(n, n)).tocsr()
        merged.sum_duplicates()
        merged = merged.tocoo()
        order = np.lexsort((merged.col, merged.row))
        return cls(n, merged.row[order], merged.col[order], merged.data[order], labels=labels)

    @property
    def m(self) -> int:
        return int(self.heads.size)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.heads, self.tails, self.weights)]

    @property
    def w_min(self) -> float:
        return float(self.weights.min()) if self.m else 0.0

    @property
    def w_max(self) -> float:
        return float(self.weights.max()) if self.m else 0.0

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids and incident weights of vertex u."""
        start, end = self.adjacency.indptr[u], self.adjacency.indptr[u + 1]
        return self.adjacency.indices[start:end], self.adjacency.data[start:end]

    def has_edge(self, u: int, v: int) -> bool:
        ids, _ = self.neighbors(u)
        return bool(np.any(ids == v))

    def laplacian(self) -> sp.csr_matrix:
        """L = D - A, rows summing to zero."""
        return (sp.diags(self.degree) - self.adjacency).tocsr()

    def incidence(self) -> sp.csr_matrix:
        """Signed m x n incidence matrix B, +1 at the head and -1 at the tail of each edge."""
        rows = np.repeat(np.arange(self.m), 2)
        cols = np.column_stack([self.heads, self.tails]).ravel()
        vals = np.tile([1.0, -1.0], self.m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))

    def component_labels(self) -> tuple[int, np.ndarray]:
        return connected_components(self.adjacency, directed=False)

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        count, _ = self.component_labels()
        return count == 1

    def __repr__(self) -> str:
        return f"<Graph(n={self.n}, m={self.m})>"


def load_edge_list(
    text_stream: TextIO,
    weighted: bool = True,
    comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES,
) -> Graph:
    """
    Parse a whitespace-separated edge list into a Graph.

    Args:
        text_stream: Iterable of lines "u v [w]"; extra columns are ignored
        weighted: Read the third column as the weight when present; when False
                  every edge gets weight 1
        comment_prefixes: Lines starting with any of these are skipped

    Returns:
        Graph with compacted ids; Graph.labels holds the original ids

    Raises:
        EdgeListParseError: Malformed line (carries the line number)
        InputValidationError: Nonpositive or non-finite weight
    """
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []

    for line_number, line in enumerate(text_stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(comment_prefixes):
            continue
        tokens = stripped.split()
        if len(tokens) < 2:
            raise EdgeListParseError(line_number, line, "expected 'u v [w]'")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(line_number, line, "vertex ids must be integers")

        w = 1.0
        if weighted and len(tokens) >= 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise EdgeListParseError(line_number, line, "weight must be a real number")
            if not np.isfinite(w) or w <= 0:
                raise InputValidationError(f"line {line_number}: weight must be positive, got {tokens[2]}")
        us.append(u)
        vs.append(v)
        ws.append(w)

    raw_u = np.asarray(us, dtype=np.int64)
    raw_v = np.asarray(vs, dtype=np.int64)
    raw_w = np.asarray(ws, dtype=np.float64)

    loops = raw_u == raw_v
    raw_u, raw_v, raw_w = raw_u[~loops], raw_v[~loops], raw_w[~loops]

    labels, inverse = np.unique(np.concatenate([raw_u, raw_v]), return_inverse=True)
    half = raw_u.size
    graph = Graph.from_edges(inverse[:half], inverse[half:], raw_w, n=labels.size, labels=labels)

    logger.info(
        f"Loaded edge list: {graph.n} vertices, {graph.m} edges "
        f"({int(loops.sum())} self-loops dropped, {half - graph.m} duplicate lines merged)"
    )
    return graph


def largest_connected_component(g: Graph) -> Graph:
    """
    Induced subgraph on the largest connected component, ids recompacted.

    Ties between equally large components go to the one containing the
    smallest original vertex id. Relative vertex order is preserved, so labels
    stay ascending.

    Raises:
        InputValidationError: The graph has no vertices
    """
    if g.n == 0:
        raise InputValidationError("cannot extract a component from an empty graph")

    count, component = g.component_labels()
    sizes = np.bincount(component, minlength=count)
    smallest_label = np.full(count, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(smallest_label, component, g.labels)
    # lexsort: last key is primary
    best = int(np.lexsort((smallest_label, -sizes))[0])

    keep = component == best
    new_id = np.cumsum(keep) - 1
    edge_keep = keep[g.heads]  # both endpoints share a component
    sub = Graph(
        int(keep.sum()),
        new_id[g.heads[edge_keep]],
        new_id[g.tails[edge_keep]],
        g.weights[edge_keep],
        labels=g.labels[keep],
    )
    if count > 1:
        logger.info(f"Largest component: {sub.n}/{g.n} vertices, {sub.m}/{g.m} edges ({count} components)")
    return sub


def write_id_mapping(g: Graph, stream: TextIO) -> None:
    """Write "orig_id new_id" per vertex."""
    for new_id, orig_id in enumerate(g.labels):
        stream.write(f"{int(orig_id)} {new_id}\n")
