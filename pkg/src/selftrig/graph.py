"""Undirected communication graphs: construction, generators, Laplacian."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph on nodes ``0..n-1``.

    ``edges`` holds each unordered pair once as ``(i, j)`` with ``i < j``,
    sorted lexicographically. Neighbor lists are sorted ascending.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    degrees: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_edges(cls, n, edges) -> "Graph":
        if n < 1:
            raise GraphError(f"graph needs at least one node, got n={n}")
        pairs = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
            pairs.add((min(i, j), max(i, j)))
        ordered = tuple(sorted(pairs))
        nbrs = [[] for _ in range(n)]
        for i, j in ordered:
            nbrs[i].append(j)
            nbrs[j].append(i)
        neighbors = tuple(tuple(sorted(v)) for v in nbrs)
        degrees = tuple(len(v) for v in neighbors)
        return cls(n=n, edges=ordered, neighbors=neighbors, degrees=degrees)

    @property
    def d_max(self) -> int:
        return max(self.degrees)

    @property
    def d_sum(self) -> int:
        return sum(self.degrees)

    @property
    def m(self) -> int:
        return len(self.edges)

    def laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for i, j in self.edges:
            L[i, j] -= 1.0
            L[j, i] -= 1.0
        L[np.diag_indices(self.n)] = self.degrees
        return L

    def incidence(self) -> np.ndarray:
        """Rows ``e_j - e_i`` for every edge ``(i, j)``, so ``B @ x`` gives ``x_j - x_i``."""
        B = np.zeros((self.m, self.n))
        for k, (i, j) in enumerate(self.edges):
            B[k, i] = -1.0
            B[k, j] = 1.0
        return B

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                v = queue.popleft()
                comp.append(v)
                for w in self.neighbors[v]:
                    if not seen[w]:
                        seen[w] = True
                        queue.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def diameter(self) -> float:
        """Longest shortest-path length; ``inf`` if disconnected."""
        if not self.is_connected():
            return float("inf")
        best = 0
        for s in range(self.n):
            dist = [-1] * self.n
            dist[s] = 0
            queue = deque([s])
            while queue:
                v = queue.popleft()
                for w in self.neighbors[v]:
                    if dist[w] < 0:
                        dist[w] = dist[v] + 1
                        queue.append(w)
            best = max(best, max(dist))
        return float(best)

    def isolated(self) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == 0]

    def to_edge_list(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in self.edges)


def parse_edge_list(text: str) -> Graph:
    """Parse lines of ``"i j"`` (0-based ids); blank lines and ``#`` comments are skipped."""
    edges = []
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer node id in {raw!r}") from None
        if i < 0 or j < 0:
            raise GraphError(f"line {lineno}: negative node id in {raw!r}")
        if i == j:
            raise GraphError(f"line {lineno}: self-loop at node {i}")
        edges.append((i, j))
        max_id = max(max_id, i, j)
    if max_id < 0:
        raise GraphError("edge list is empty")
    return Graph.from_edges(max_id + 1, edges)


def ring(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"ring needs n >= 3, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"path needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def erdos_renyi(n: int, p: float, seed: int, max_attempts: int = 1000) -> Graph:
    """G(n, p) resampled from one seeded stream until connected."""
    if n < 2:
        raise GraphError(f"erdos_renyi needs n >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        keep = rng.random(iu.size) < p
        g = Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        if g.is_connected():
            return g
    raise GraphError(
        f"no connected G({n}, {p}) within {max_attempts} attempts; try a larger p"
    )


GENERATORS = {
    "ring": ring,
    "path": path,
    "complete": complete,
    "erdos_renyi": erdos_renyi,
}


def laplacian_quadratic(g: Graph, x) -> float:
    """``x^T L x`` computed as the sum of squared edge differences."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise GraphError(f"state has shape {x.shape}, graph has n={g.n}")
    if not g.edges:
        return 0.0
    e = np.asarray(g.edges)
    diff = x[e[:, 0]] - x[e[:, 1]]
    return float(diff @ diff)
