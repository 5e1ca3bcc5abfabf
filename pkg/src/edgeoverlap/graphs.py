"""Exact classical graph comparison: edge overlap, brute-force MEO, similarity."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernels

ENUMERATION_LIMIT = 10


class GraphError(ValueError):
    """Malformed graph input or incompatible graph pair."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices 0..n-1."""

    n: int
    adj: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=np.int64)
        if adj.shape != (self.n, self.n):
            raise GraphError(f"adjacency must be {self.n}x{self.n}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency matrix is not symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphError("self-loops are not allowed")
        if np.any((adj != 0) & (adj != 1)):
            raise GraphError("adjacency entries must be 0 or 1")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        if n < 1:
            raise GraphError("a graph needs at least one vertex")
        adj = np.zeros((n, n), dtype=np.int64)
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"edge {e!r} is not a vertex pair")
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has a vertex outside [0, {n})")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if adj[u, v]:
                raise GraphError(f"duplicate edge ({u}, {v})")
            adj[u, v] = adj[v, u] = 1
        return cls(n, adj)

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum()) // 2

    def edges(self) -> np.ndarray:
        """Edges as an (m, 2) array with u < v, row-major order."""
        u, v = np.nonzero(np.triu(self.adj, 1))
        return np.stack([u, v], axis=1).astype(np.int64)

    def relabel(self, tau: Sequence[int]) -> "Graph":
        """Graph with vertex i renamed to tau[i]."""
        tau = np.asarray(tau, dtype=np.int64)
        return Graph.from_edges(self.n, [(tau[u], tau[v]) for u, v in self.edges()])

    def key(self) -> tuple:
        return (self.n, self.adj.tobytes())

    def to_json(self) -> dict:
        return {"n": self.n, "edges": self.edges().tolist()}

    def __eq__(self, other):
        return isinstance(other, Graph) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def load_graph(source: str) -> Graph:
    """Parse a graph from JSON ``{"n":..,"edges":[[u,v],..]}`` or edge-list text.

    The edge-list form starts with a line ``n <int>`` followed by one
    ``u v`` pair per line; blank lines and ``#`` comments are skipped.
    """
    text = source.strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"invalid graph JSON: {exc}") from None
        if not isinstance(data, dict) or "n" not in data:
            raise GraphError("graph JSON needs an integer field 'n'")
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise GraphError("'n' must be an integer")
        edges = data.get("edges", [])
        if not isinstance(edges, list):
            raise GraphError("'edges' must be a list of pairs")
        for e in edges:
            if not isinstance(e, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in e):
                raise GraphError(f"edge {e!r} is not a pair of integers")
        return Graph.from_edges(n, edges)

    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph source")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise GraphError("edge-list must start with a line 'n <int>'")
    try:
        n = int(head[1])
        edges = [tuple(int(tok) for tok in ln.split()) for ln in lines[1:]]
    except ValueError:
        raise GraphError("edge-list entries must be integers") from None
    return Graph.from_edges(n, edges)


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_graph(fh.read())


def _check_pair(g1: Graph, g2: Graph) -> int:
    if g1.n != g2.n:
        raise GraphError(f"graphs differ in size: {g1.n} vs {g2.n}")
    return g1.n


def _check_enumerable(n: int):
    if n > ENUMERATION_LIMIT:
        raise GraphError(f"n = {n} exceeds the enumeration limit of {ENUMERATION_LIMIT}")


@lru_cache(maxsize=None)
def all_permutations(n: int) -> np.ndarray:
    """Every permutation of range(n) in lexicographic order, one per row."""
    _check_enumerable(n)
    if n <= 1:
        perms = np.zeros((1, n), dtype=np.int8)
    else:
        base = all_permutations(n - 1)
        blocks = []
        for first in range(n):
            rest = base + (base >= first)
            head = np.full((base.shape[0], 1), first, dtype=np.int8)
            blocks.append(np.hstack([head, rest.astype(np.int8)]))
        perms = np.vstack(blocks)
    perms.setflags(write=False)
    return perms


def edge_overlap(g1: Graph, g2: Graph, sigma: Sequence[int]) -> int:
    """Edges shared by G1 and G2 relabelled by sigma (unordered count)."""
    n = _check_pair(g1, g2)
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (n,):
        raise GraphError(f"permutation length {sigma.size} does not match n = {n}")
    if sorted(sigma.tolist()) != list(range(n)):
        raise GraphError(f"{sigma.tolist()} is not a permutation of range({n})")
    e = g2.edges()
    return int(g1.adj[sigma[e[:, 0]], sigma[e[:, 1]]].sum())


def overlap_values(g1: Graph, g2: Graph) -> np.ndarray:
    """EO for every permutation, aligned with ``all_permutations(n)``."""
    n = _check_pair(g1, g2)
    _check_enumerable(n)
    return _overlaps_cached(g1, g2)


@lru_cache(maxsize=256)
def _overlaps_cached(g1: Graph, g2: Graph) -> np.ndarray:
    vals = _kernels.overlap_counts(g1.adj, g2.edges(), all_permutations(g1.n))
    vals.setflags(write=False)
    return vals


def brute_force_meo(g1: Graph, g2: Graph) -> tuple[int, int]:
    """(MEO, number of optimal permutations) by full enumeration."""
    vals = overlap_values(g1, g2)
    best = int(vals.max())
    return best, int(np.count_nonzero(vals == best))


def similarity(g1: Graph, g2: Graph) -> float:
    _check_pair(g1, g2)
    denom = max(g1.edge_count, g2.edge_count)
    if denom == 0:
        return 1.0
    return brute_force_meo(g1, g2)[0] / denom


def max_threshold(g1: Graph, g2: Graph) -> int:
    """E_max = min(|G1|, |G2|)."""
    return min(g1.edge_count, g2.edge_count)


def count_exceeding(g1: Graph, g2: Graph, threshold: int) -> int:
    """Number of permutations whose edge overlap is strictly above ``threshold``."""
    _check_pair(g1, g2)
    if not 0 <= threshold <= max_threshold(g1, g2):
        raise GraphError(f"threshold {threshold} outside [0, {max_threshold(g1, g2)}]")
    return int(np.count_nonzero(overlap_values(g1, g2) > threshold))


def eo_distribution(g1: Graph, g2: Graph) -> dict[int, int]:
    vals, counts = np.unique(overlap_values(g1, g2), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def histogram_csv(hist: dict[int, int]) -> str:
    rows = ["overlap,count"] + [f"{k},{v}" for k, v in sorted(hist.items())]
    return "\n".join(rows) + "\n"


def is_isomorphic(g1: Graph, g2: Graph) -> bool:
    _check_pair(g1, g2)
    if g1.edge_count != g2.edge_count:
        return False
    return brute_force_meo(g1, g2)[0] == g1.edge_count


# small named graphs used by fixtures, the CLI and the acceptance suite

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def empty_graph(n: int) -> Graph:
    return Graph.from_edges(n, [])


def star_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    return Graph.from_edges(n, list(zip(iu[0][keep].tolist(), iu[1][keep].tolist())))
