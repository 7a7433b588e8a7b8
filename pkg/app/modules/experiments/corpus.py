"""
Small synthetic graph corpus built with networkx.
"""
import logging

import networkx as nx
import numpy as np

from app.errors import InputValidationError
from app.modules.graph.graph import Graph, largest_connected_component

logger = logging.getLogger(__name__)


def graph_from_networkx(nx_graph: nx.Graph, weight: str | None = None) -> Graph:
    """
    Convert a networkx graph, ids compacted in sorted node order.

    Args:
        nx_graph: Undirected networkx graph with sortable node keys
        weight: Edge attribute to read as weight; None for unit weights
    """
    if nx_graph.is_directed():
        raise InputValidationError("directed graphs are not supported")
    nodes = sorted(nx_graph.nodes())
    index = {node: i for i, node in enumerate(nodes)}
    us, vs, ws = [], [], []
    for a, b, data in nx_graph.edges(data=True):
        us.append(index[a])
        vs.append(index[b])
        ws.append(float(data.get(weight, 1.0)) if weight is not None else 1.0)
    labels = np.arange(len(nodes), dtype=np.int64)
    return Graph.from_edges(us, vs, ws, n=len(nodes), labels=labels)


def karate_club() -> Graph:
    """Zachary's karate club, unit weights."""
    return graph_from_networkx(nx.karate_club_graph())


def watts_strogatz(n: int, k: int, p: float, seed: int) -> Graph:
    return graph_from_networkx(nx.connected_watts_strogatz_graph(n, k, p, seed=seed))


def gnp_component(n: int, p: float, seed: int) -> Graph:
    """Largest component of G(n, p)."""
    return largest_connected_component(graph_from_networkx(nx.gnp_random_graph(n, p, seed=seed)))


def grid(rows: int, cols: int) -> Graph:
    return graph_from_networkx(nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols)))


def default_corpus(seed: int = 0) -> list[tuple[str, Graph]]:
    """Named corpus graphs, all connected, n <= 100."""
    return [
        ("karate", karate_club()),
        ("ws40", watts_strogatz(40, 4, 0.3, seed)),
        ("gnp60", gnp_component(60, 0.08, seed)),
        ("grid6x6", grid(6, 6)),
        ("ws100", watts_strogatz(100, 6, 0.2, seed + 1)),
    ]


def random_connected_graph(rng: np.random.Generator, n_min: int, n_max: int, weighted: bool = False) -> Graph:
    """
    Random connected graph with n in [n_min, n_max].

    Alternates Watts-Strogatz and G(n, p) components; weights uniform in [0.5, 2] when weighted.
    """
    n = int(rng.integers(n_min, n_max + 1))
    seed = int(rng.integers(0, 2**31 - 1))
    if rng.random() < 0.5:
        g = watts_strogatz(n, 4, 0.3, seed)
    else:
        g = gnp_component(n, min(1.0, 4.0 / max(n - 1, 1)), seed)
        if g.n < 3:
            g = watts_strogatz(n, 4, 0.3, seed)
    if weighted:
        g = Graph(g.n, g.heads, g.tails, rng.uniform(0.5, 2.0, size=g.m), labels=g.labels)
    return g
