"""Betweenness centrality workload.

BC(v) sums sigma_st(v)/sigma_st over ordered pairs s != v != t, where
sigma counts shortest paths.  The graph is directed, replicated read-only
at every place, and compressed (offsets + edge array).  Per-source work is
Brandes' unweighted algorithm: a BFS computing distances and path counts,
then a reverse-order dependency accumulation.  Sources are the task items;
the GLB variant balances vertex intervals while the static baseline
partitions them up front.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from time import perf_counter

import numpy as np
from numba import njit

from .bags import Interval, IntervalBag, SplitStrategy
from .core import GlbConfig, GlbResult, TaskQueue, glb_run
from .errors import InvalidConfigError


@dataclass(frozen=True)
class RmatParams:
    scale: int
    a: float = 0.8
    b: float = 0.05
    c: float = 0.05
    dq: float = 0.1
    seed: int = 1
    edge_factor: int = 8

    def __post_init__(self):
        if self.scale < 1:
            raise InvalidConfigError(f"scale must be >= 1, got {self.scale}")
        probs = (self.a, self.b, self.c, self.dq)
        if any(p < 0 for p in probs):
            raise InvalidConfigError(f"negative quadrant probability in {probs}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise InvalidConfigError(f"quadrant probabilities sum to {sum(probs)}, not 1")
        if self.edge_factor < 1:
            raise InvalidConfigError(f"edge_factor must be >= 1, got {self.edge_factor}")


@dataclass
class Graph:
    """Directed simple graph in compressed adjacency form."""

    n_vertices: int
    offsets: np.ndarray
    edges: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def out_degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def validate(self) -> None:
        n = self.n_vertices
        if self.offsets.shape[0] != n + 1 or self.offsets[0] != 0:
            raise InvalidConfigError("offsets must have N+1 entries starting at 0")
        if np.any(np.diff(self.offsets) < 0):
            raise InvalidConfigError("offsets must be non-decreasing")
        if self.offsets[-1] != self.edges.shape[0]:
            raise InvalidConfigError("offsets end must equal edge count")
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise InvalidConfigError("edge endpoint out of range")
        for u in range(n):
            nbrs = self.edges[self.offsets[u]:self.offsets[u + 1]]
            if np.any(nbrs == u):
                raise InvalidConfigError(f"self-loop at vertex {u}")
            if nbrs.size > 1 and np.any(np.diff(np.sort(nbrs)) == 0):
                raise InvalidConfigError(f"duplicate edge at vertex {u}")


def graph_from_edges(n_vertices: int, u: np.ndarray, v: np.ndarray) -> Graph:
    """Build compressed adjacency from parallel endpoint arrays (deduplicated)."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.size:
        if u.min() < 0 or u.max() >= n_vertices or v.min() < 0 or v.max() >= n_vertices:
            raise InvalidConfigError("edge endpoint out of range")
    keys = np.unique(u * np.int64(n_vertices) + v)
    uu = keys // n_vertices
    vv = keys % n_vertices
    keep = uu != vv
    uu, vv = uu[keep], vv[keep]
    counts = np.bincount(uu, minlength=n_vertices)
    offsets = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Graph(n_vertices, offsets, vv.astype(np.int64))


def rmat_generate(params: RmatParams) -> Graph:
    """Recursive-matrix generator: scale levels of quadrant selection.

    Draws edge_factor * N candidates, drops self-loops, deduplicates.
    Deterministic for a given seed.
    """
    n = 1 << params.scale
    m = params.edge_factor * n
    rng = np.random.default_rng(params.seed)
    u = np.zeros(m, dtype=np.int64)
    v = np.zeros(m, dtype=np.int64)
    # Quadrants per level: a=(0,0), b=(0,1), c=(1,0), dq=(1,1).
    t_b = params.a + params.b
    t_c = t_b + params.c
    for _ in range(params.scale):
        r = rng.random(m)
        u_bit = r >= t_b
        v_bit = ((r >= params.a) & (r < t_b)) | (r >= t_c)
        u = 2 * u + u_bit
        v = 2 * v + v_bit
    return graph_from_edges(n, u, v)


def degenerate_graph(n_vertices: int) -> Graph:
    """Worst-case instance: an edge (i, j) for every i < j."""
    if n_vertices < 1:
        raise InvalidConfigError(f"need at least one vertex, got {n_vertices}")
    counts = np.arange(n_vertices - 1, -1, -1, dtype=np.int64)
    offsets = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    edges = np.empty(int(offsets[-1]), dtype=np.int64)
    for i in range(n_vertices):
        edges[offsets[i]:offsets[i + 1]] = np.arange(i + 1, n_vertices)
    return Graph(n_vertices, offsets, edges)


def save_text(graph: Graph, path: str) -> None:
    """Fixture format: first line "N M", then M lines "u v"."""
    with open(path, "w") as f:
        f.write(f"{graph.n_vertices} {graph.n_edges}\n")
        for u in range(graph.n_vertices):
            for e in range(int(graph.offsets[u]), int(graph.offsets[u + 1])):
                f.write(f"{u} {int(graph.edges[e])}\n")


def load_text(path: str) -> Graph:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise InvalidConfigError(f"{path}: bad header")
        n, m = int(header[0]), int(header[1])
        u = np.empty(m, dtype=np.int64)
        v = np.empty(m, dtype=np.int64)
        for i in range(m):
            parts = f.readline().split()
            if len(parts) != 2:
                raise InvalidConfigError(f"{path}: bad edge line {i}")
            u[i], v[i] = int(parts[0]), int(parts[1])
    graph = graph_from_edges(n, u, v)
    if graph.n_edges != m:
        raise InvalidConfigError(f"{path}: self-loops or duplicate edges in fixture")
    graph.validate()
    return graph


# --- the per-source kernel ---------------------------------------------------

@njit(cache=True, nogil=True)
def _brandes_fill(offsets, edges, s, dist, sigma, delta, order, acc):
    n = dist.shape[0]
    for i in range(n):
        dist[i] = -1
        sigma[i] = 0.0
        delta[i] = 0.0
    dist[s] = 0
    sigma[s] = 1.0
    order[0] = s
    head = 0
    tail = 1
    while head < tail:
        vtx = order[head]
        head += 1
        dv = dist[vtx]
        sv = sigma[vtx]
        for e in range(offsets[vtx], offsets[vtx + 1]):
            w = edges[e]
            if dist[w] < 0:
                dist[w] = dv + 1
                order[tail] = w
                tail += 1
            if dist[w] == dv + 1:
                sigma[w] += sv
    # Reverse BFS order; on a directed graph the out-edges of v at depth k
    # point at all of v's shortest-path successors at depth k+1.
    for i in range(tail - 1, -1, -1):
        vtx = order[i]
        dv = dist[vtx]
        sv = sigma[vtx]
        dsum = 0.0
        for e in range(offsets[vtx], offsets[vtx + 1]):
            w = edges[e]
            if dist[w] == dv + 1:
                dsum += sv / sigma[w] * (1.0 + delta[w])
        delta[vtx] = dsum
        if vtx != s:
            acc[vtx] += dsum


class _Scratch:
    """Per-activity Brandes work arrays, reused across sources."""

    __slots__ = ("dist", "sigma", "delta", "order")

    def __init__(self, n: int):
        self.dist = np.empty(n, dtype=np.int64)
        self.sigma = np.empty(n, dtype=np.float64)
        self.delta = np.empty(n, dtype=np.float64)
        self.order = np.empty(n, dtype=np.int64)


def brandes_source(graph: Graph, s: int, acc: np.ndarray) -> None:
    """Add source s's dependency contributions into acc (length N)."""
    if not 0 <= s < graph.n_vertices:
        raise InvalidConfigError(f"source {s} outside graph of {graph.n_vertices}")
    scratch = _Scratch(graph.n_vertices)
    _brandes_fill(graph.offsets, graph.edges, s, scratch.dist, scratch.sigma,
                  scratch.delta, scratch.order, acc)


def bc_sequential(graph: Graph) -> np.ndarray:
    """All sources in ascending order, one map; the reference for all variants."""
    acc = np.zeros(graph.n_vertices, dtype=np.float64)
    scratch = _Scratch(graph.n_vertices)
    for s in range(graph.n_vertices):
        _brandes_fill(graph.offsets, graph.edges, s, scratch.dist, scratch.sigma,
                      scratch.delta, scratch.order, acc)
    return acc


def bc_bruteforce(graph: Graph) -> np.ndarray:
    """Independent desk-scale oracle via path-count composition.

    All-pairs BFS with exact integer path counts; sigma_st(v) =
    sigma_sv * sigma_vt whenever dist(s,v) + dist(v,t) = dist(s,t).
    Kept deliberately naive and free of the Brandes machinery.
    """
    n = graph.n_vertices
    if n > 64:
        raise InvalidConfigError(f"brute-force oracle limited to 64 vertices, got {n}")
    adj = [
        [int(w) for w in graph.edges[graph.offsets[u]:graph.offsets[u + 1]]]
        for u in range(n)
    ]
    dist = [[-1] * n for _ in range(n)]
    paths = [[0] * n for _ in range(n)]
    for s in range(n):
        dist[s][s] = 0
        paths[s][s] = 1
        frontier = [s]
        while frontier:
            nxt = []
            for v in frontier:
                dv = dist[s][v]
                pv = paths[s][v]
                for w in adj[v]:
                    if dist[s][w] < 0:
                        dist[s][w] = dv + 1
                        nxt.append(w)
                    if dist[s][w] == dv + 1:
                        paths[s][w] += pv
            frontier = nxt
    bc = np.zeros(n, dtype=np.float64)
    for s in range(n):
        for v in range(n):
            if v == s or dist[s][v] < 0:
                continue
            for t in range(n):
                if t == s or t == v:
                    continue
                d_st = dist[s][t]
                if d_st < 0:
                    continue
                if dist[s][v] + dist[v][t] == d_st:
                    bc[v] += paths[s][v] * paths[v][t] / paths[s][t]
    return bc


def reduce_maps(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    if m1.shape != m2.shape:
        raise InvalidConfigError(f"map length mismatch: {m1.shape} vs {m2.shape}")
    return m1 + m2


def teps(n_vertices: int, t):
    """Traversed edges per second, exactly 8*N*N/t (exact on rationals)."""
    if t <= 0:
        raise InvalidConfigError(f"elapsed time must be positive, got {t}")
    return 8 * n_vertices * n_vertices / t


def top_vertices(scores: np.ndarray) -> set[int]:
    if scores.shape[0] < 1:
        raise InvalidConfigError("empty betweenness map")
    return set(int(i) for i in np.flatnonzero(scores == scores.max()))


# --- baselines and the GLB variant ------------------------------------------

def bc_static(graph: Graph, places: int, randomize: bool = False, seed: int = 0):
    """Static partition baseline: P contiguous source blocks, one thread each.

    Returns (map, busy_times).  With randomize, sources are permuted first,
    which spreads heavy sources across blocks without balancing them.
    """
    if places < 1:
        raise InvalidConfigError(f"places must be >= 1, got {places}")
    n = graph.n_vertices
    if randomize:
        order = np.random.default_rng(seed).permutation(n).astype(np.int64)
    else:
        order = np.arange(n, dtype=np.int64)
    blocks = np.array_split(order, places)
    maps = [np.zeros(n, dtype=np.float64) for _ in range(places)]
    busy = [0.0] * places

    def run_block(i: int) -> None:
        scratch = _Scratch(n)
        acc = maps[i]
        t0 = perf_counter()
        for s in blocks[i]:
            _brandes_fill(graph.offsets, graph.edges, s, scratch.dist,
                          scratch.sigma, scratch.delta, scratch.order, acc)
        busy[i] = perf_counter() - t0

    if places == 1:
        run_block(0)
    else:
        threads = [threading.Thread(target=run_block, args=(i,)) for i in range(places)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    total = maps[0]
    for m in maps[1:]:
        total = reduce_maps(total, m)
    return total, busy


class BcTaskQueue(TaskQueue):
    """Interval bag of sources over a replicated graph; map is the result."""

    block_items = 1

    def __init__(self, graph: Graph, strategy: SplitStrategy = SplitStrategy.SUFFIX_BALANCED):
        super().__init__(IntervalBag(strategy=strategy))
        self.graph = graph
        self.scores = np.zeros(graph.n_vertices, dtype=np.float64)
        self._scratch = _Scratch(graph.n_vertices)

    def process(self, n: int) -> bool:
        sources = self.bag.pop(n)
        g = self.graph
        sc = self._scratch
        for s in sources:
            _brandes_fill(g.offsets, g.edges, s, sc.dist, sc.sigma, sc.delta,
                          sc.order, self.scores)
        self.processed += len(sources)
        return len(sources) == n

    def result(self) -> np.ndarray:
        return self.scores

    def identity(self) -> np.ndarray:
        return np.zeros(self.graph.n_vertices, dtype=np.float64)

    def reduce(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return reduce_maps(a, b)

    def encode_bag(self, bag: IntervalBag) -> bytes:
        return bag.to_bytes()

    def decode_bag(self, data: bytes) -> IntervalBag:
        return IntervalBag.from_bytes(data, self.bag.strategy)


def bc_glb(
    graph: Graph,
    config: GlbConfig,
    strategy: SplitStrategy = SplitStrategy.SUFFIX_BALANCED,
    timeout_s: float = 120.0,
) -> tuple[np.ndarray, GlbResult]:
    """GLB-balanced betweenness: place 0 seeded with the interval [0, N)."""

    def root_init(queue: BcTaskQueue) -> None:
        queue.bag.push(Interval(0, graph.n_vertices))

    result = glb_run(
        config,
        lambda p: BcTaskQueue(graph, strategy),
        root_init,
        timeout_s=timeout_s,
    )
    return result.value, result
