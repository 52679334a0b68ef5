from __future__ import annotations

import numpy as np

from glb.bc import Graph, graph_from_edges


def sym_graph(n: int, pairs) -> Graph:
    """Build a graph with both directions of every given pair."""
    u, v = [], []
    for a, b in pairs:
        u += [a, b]
        v += [b, a]
    return graph_from_edges(n, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64))


def path_graph(length: int) -> Graph:
    return sym_graph(length, [(i, i + 1) for i in range(length - 1)])
