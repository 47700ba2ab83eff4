"""Interaction graphs, girth and the classical MaxCut helpers used to pick sign strings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np

MAX_VERTICES = 1 << 20
EXHAUSTIVE_LIMIT = 26
# cap on vertices whose sign strings can be enumerated in one numpy block
_ENUM_CHUNK_BITS = 16


class _Infinite:
    """Girth of an acyclic graph. Compares greater than every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE_GIRTH"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("INFINITE_GIRTH")

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self


INFINITE_GIRTH = _Infinite()


@dataclass(frozen=True)
class InteractionGraph:
    """Simple undirected graph on vertices ``0..n_vertices-1`` with edge weights.

    Edges are stored as a tuple of ``(u, v, w)`` with ``u < v``.
    """

    n_vertices: int
    edges: tuple

    def __post_init__(self):
        n = int(self.n_vertices)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        if n > MAX_VERTICES:
            raise ValueError(f"n_vertices={n} exceeds supported maximum {MAX_VERTICES}")
        seen = set()
        clean = []
        for e in self.edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1.0
            elif len(e) == 3:
                u, v, w = e
            else:
                raise ValueError(f"edge {e!r} must be (u, v) or (u, v, w)")
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((key[0], key[1], w))
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_array(self):
        """Return ``(u, v, w)`` as numpy arrays."""
        if not self.edges:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        u, v, w = zip(*self.edges)
        return np.array(u), np.array(v), np.array(w, dtype=float)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        """Dense symmetric weight matrix."""
        W = np.zeros((self.n_vertices, self.n_vertices))
        for u, v, w in self.edges:
            W[u, v] = W[v, u] = w
        return W

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n_vertices))
        G.add_weighted_edges_from(self.edges)
        return G

    def is_bipartite(self) -> bool:
        return nx.is_bipartite(self.to_networkx())

    def to_dict(self) -> dict:
        edges = [[u, v] if w == 1.0 else [u, v, w] for u, v, w in self.edges]
        return {"n": self.n_vertices, "edges": edges}

    @classmethod
    def from_dict(cls, data: dict) -> "InteractionGraph":
        if "n" not in data or "edges" not in data:
            raise ValueError("graph JSON needs 'n' and 'edges'")
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "InteractionGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def from_networkx(G: nx.Graph) -> InteractionGraph:
    nodes = sorted(G.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    edges = [(index[a], index[b], float(d.get("weight", 1.0))) for a, b, d in G.edges(data=True)]
    return InteractionGraph(len(nodes), tuple(edges))


def ring(n: int) -> InteractionGraph:
    if n < 3:
        raise ValueError("a ring needs at least 3 vertices")
    return InteractionGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path(n: int) -> InteractionGraph:
    return InteractionGraph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete(n: int) -> InteractionGraph:
    return InteractionGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def single_edge() -> InteractionGraph:
    return InteractionGraph(2, ((0, 1),))


def heawood() -> InteractionGraph:
    """The 14-vertex cubic graph of girth 6."""
    return from_networkx(nx.heawood_graph())


def generate(kind: str, seed: int = 0, **params) -> InteractionGraph:
    """Build a graph of the given family.

    ``ring``, ``path`` and ``complete`` take ``n``; ``random_regular`` takes
    ``n`` and ``degree``; ``erdos_renyi`` takes ``n`` and ``prob``.
    The output depends only on ``(kind, params, seed)``.
    """
    n = int(params.get("n", 0))
    if n < 1:
        raise ValueError("graph size n must be >= 1")
    if n > MAX_VERTICES:
        raise ValueError(f"n={n} exceeds supported maximum {MAX_VERTICES}")
    seed = int(seed) % (1 << 64)
    if kind == "ring":
        return ring(n)
    if kind == "path":
        return path(n)
    if kind == "complete":
        return complete(n)
    if kind == "random_regular":
        d = int(params["degree"])
        if d < 0 or d >= n:
            raise ValueError(f"degree {d} must satisfy 0 <= degree < n={n}")
        if (n * d) % 2:
            raise ValueError(f"n*degree = {n * d} is odd; no regular graph exists")
        G = nx.random_regular_graph(d, n, seed=np.random.default_rng(seed))
        return from_networkx(G)
    if kind == "erdos_renyi":
        prob = float(params["prob"])
        if not 0.0 <= prob <= 1.0:
            raise ValueError("edge probability must lie in [0, 1]")
        rng = np.random.default_rng(seed)
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < prob
        return InteractionGraph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))
    raise ValueError(f"unknown graph kind {kind!r}")


def girth(g: InteractionGraph):
    """Length of the shortest cycle, or ``INFINITE_GIRTH`` for a forest."""
    if g.n_edges == 0:
        return INFINITE_GIRTH
    value = nx.girth(g.to_networkx())
    return INFINITE_GIRTH if math.isinf(value) else int(value)


def _check_signs(g: InteractionGraph, s) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (g.n_vertices,):
        raise ValueError(f"sign string length {s.shape} does not match n={g.n_vertices}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("sign string entries must be +1 or -1")
    return s.astype(int)


def cut_value(g: InteractionGraph, s) -> float:
    s = _check_signs(g, s)
    u, v, w = g.edge_array()
    return float(np.sum(w[s[u] != s[v]]))


def max_cut_exact(g: InteractionGraph, limit: int = EXHAUSTIVE_LIMIT):
    """Exhaustive MaxCut with ``s_0 = +1`` fixed.

    Among optimal strings the lexicographically smallest one is returned,
    reading ``+1`` before ``-1``.
    """
    n = g.n_vertices
    if n > limit:
        raise ValueError(f"n={n} exceeds exhaustive MaxCut limit {limit}")
    if n == 1:
        return np.ones(1, dtype=int), 0.0
    u, v, w = g.edge_array()
    m = n - 1
    # free vertex k (1..n-1) sits at bit position m-k so that integer order is lex order
    shifts = np.array([m - k for k in range(1, n)], dtype=np.int64)
    chunk = 1 << min(m, _ENUM_CHUNK_BITS)
    best_val, best_idx = -np.inf, 0
    for start in range(0, 1 << m, chunk):
        idx = np.arange(start, min(start + chunk, 1 << m), dtype=np.int64)
        bits = np.zeros((len(idx), n), dtype=np.int8)
        bits[:, 1:] = (idx[:, None] >> shifts[None, :]) & 1
        cuts = (bits[:, u] != bits[:, v]).astype(float) @ w if len(w) else np.zeros(len(idx))
        k = int(np.argmax(cuts))
        if cuts[k] > best_val + 1e-12:
            best_val, best_idx = float(cuts[k]), int(idx[k])
    bits = np.zeros(n, dtype=int)
    bits[1:] = (best_idx >> shifts) & 1
    s = 1 - 2 * bits
    return s, cut_value(g, s)


def _local_search_once(W, s):
    # gain of flipping v: sum_u W[v,u] s_v s_u (edges that become cut minus those uncut)
    s = s.copy()
    field = W @ s
    while True:
        gains = s * field
        v = int(np.argmax(gains))
        if gains[v] <= 1e-12:
            return s
        s[v] = -s[v]
        field += 2 * s[v] * W[:, v]


def max_cut_local_search(g: InteractionGraph, seed: int = 0, restarts: int = 8):
    """Best single-flip local optimum over random restarts."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = g.n_vertices
    W = g.adjacency()
    rng = np.random.default_rng(seed)
    best_s, best_val = None, -np.inf
    for _ in range(restarts):
        s0 = rng.choice(np.array([1, -1]), size=n)
        s = _local_search_once(W, s0)
        if s[0] < 0:
            s = -s
        val = cut_value(g, s)
        if val > best_val + 1e-12:
            best_s, best_val = s, val
    return best_s.astype(int), float(best_val)


def choose_signs(g: InteractionGraph, policy: str = "exact", seed: int = 0, restarts: int = 32) -> np.ndarray:
    if policy == "exact":
        return max_cut_exact(g)[0]
    if policy == "local_search":
        return max_cut_local_search(g, seed=seed, restarts=restarts)[0]
    if policy == "random":
        rng = np.random.default_rng(seed)
        return rng.choice(np.array([1, -1]), size=g.n_vertices)
    raise ValueError(f"unknown sign policy {policy!r}")


def alternating_signs(n: int) -> np.ndarray:
    return np.array([1 if i % 2 == 0 else -1 for i in range(n)])


def save_signs(s, path):
    Path(path).write_text(json.dumps({"signs": [int(x) for x in s]}))


def load_signs(path) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    return np.asarray(data["signs"], dtype=int)
