"""Weighted undirected graphs and the spectral quantities used for gain design.

The protocols in this package run on connected undirected networks with
positive edge weights.  This module provides an immutable graph container,
Laplacian and incidence matrices, an algebraic-connectivity solver, error
signals (per node and per edge), standard topology generators, and a
calibration helper that rescales weights to hit a target connectivity.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "WeightedGraph",
    "laplacian",
    "incidence",
    "jacobi_eigenvalues",
    "algebraic_connectivity",
    "neighbor_errors",
    "edge_errors",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "complete_graph",
    "random_connected_graph",
    "calibrate_connectivity",
]

# Convergence controls for the cyclic Jacobi sweep below.
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with strictly positive edge weights.

    Edges are stored as ``(i, j, w)`` triples with ``i < j``; the
    constructor normalizes orientation, forbids self-loops, duplicate
    edges, and non-positive weights.

    Parameters
    ----------
    n : int
        Number of nodes, labeled ``0 .. n-1``.
    edges : tuple of (int, int, float)
        Weighted edges.  Any iterable of ``(i, j, w)`` is accepted.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        normalized = []
        seen = set()
        for edge in self.edges:
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not w > 0.0:
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
            seen.add((i, j))
            normalized.append((i, j, w))
        normalized.sort()
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        """Neighbors of node ``i`` with the connecting weight."""
        out = []
        for a, b, w in self.edges:
            if a == i:
                out.append((b, w))
            elif b == i:
                out.append((a, w))
        return out

    def adjacency(self) -> NDArray[np.float64]:
        """Dense symmetric adjacency matrix."""
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a

    def is_connected(self) -> bool:
        """Breadth-first reachability of every node from node 0."""
        if self.n == 1:
            return True
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(v)
        return count == self.n

    def scaled(self, factor: float) -> "WeightedGraph":
        """Copy of the graph with every weight multiplied by ``factor``."""
        if not factor > 0.0:
            raise ValueError("scale factor must be positive")
        return WeightedGraph(
            self.n, tuple((i, j, w * factor) for i, j, w in self.edges)
        )

    def to_dict(self) -> dict:
        """JSON-ready form: ``{"n": n, "edges": [[i, j, w], ...]}``."""
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        edges = tuple((e[0], e[1], float(e[2])) for e in data.get("edges", []))
        return cls(int(data["n"]), edges)


def laplacian(graph: WeightedGraph) -> NDArray[np.float64]:
    """Weighted Laplacian ``Q = degree - adjacency`` (symmetric PSD)."""
    q = -graph.adjacency()
    diag = -q.sum(axis=1)
    np.fill_diagonal(q, diag)
    return q


def incidence(graph: WeightedGraph) -> NDArray[np.float64]:
    """Weighted incidence matrix ``D`` with ``D @ D.T`` equal to the Laplacian.

    Column ``l`` for edge ``(i, j, w)`` holds ``+sqrt(w)`` at row ``i`` and
    ``-sqrt(w)`` at row ``j`` (with ``i < j``), so each column sums to zero.
    """
    d = np.zeros((graph.n, graph.num_edges))
    for l, (i, j, w) in enumerate(graph.edges):
        root = math.sqrt(w)
        d[i, l] = root
        d[j, l] = -root
    return d


def jacobi_eigenvalues(matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all upper-triangle pairs, rotating away each off-diagonal
    entry, until the largest off-diagonal magnitude falls below 1e-12 or
    100 sweeps have run.  Returns the eigenvalues sorted ascending.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(a.diagonal()))
        if off.max() < _JACOBI_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < _JACOBI_TOL:
                    continue
                # Classic two-sided rotation choosing the smaller angle.
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(a.diagonal())


def algebraic_connectivity(graph: WeightedGraph) -> float:
    """Second-smallest Laplacian eigenvalue; positive iff the graph connects."""
    if graph.n == 1:
        return 0.0
    eigs = jacobi_eigenvalues(laplacian(graph))
    return float(eigs[1])


def neighbor_errors(graph: WeightedGraph, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-node disagreement ``e_i = sum_j w_ij (x_j - x_i)``.

    Computed by explicit neighbor sums; equals ``-Q @ x`` for the
    Laplacian ``Q``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (graph.n,):
        raise ValueError(f"state must have shape ({graph.n},)")
    e = np.zeros(graph.n)
    for i, j, w in graph.edges:
        diff = w * (x[j] - x[i])
        e[i] += diff
        e[j] -= diff
    return e


def edge_errors(graph: WeightedGraph, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-edge disagreement ``sqrt(w_ij) (x_j - x_i)``, one entry per edge.

    Equals ``-D.T @ x`` for the incidence matrix ``D``, in edge order.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (graph.n,):
        raise ValueError(f"state must have shape ({graph.n},)")
    out = np.empty(graph.num_edges)
    for l, (i, j, w) in enumerate(graph.edges):
        out[l] = math.sqrt(w) * (x[j] - x[i])
    return out


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Path on ``n`` nodes: 0-1-2-...-(n-1)."""
    return WeightedGraph(n, tuple((i, i + 1, weight) for i in range(n - 1)))


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Cycle on ``n`` nodes (requires ``n >= 3``)."""
    if n < 3:
        raise ValueError("cycle needs at least 3 nodes")
    edges = [(i, i + 1, weight) for i in range(n - 1)]
    edges.append((0, n - 1, weight))
    return WeightedGraph(n, tuple(edges))


def star_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Star with hub 0 and ``n - 1`` leaves."""
    if n < 2:
        raise ValueError("star needs at least 2 nodes")
    return WeightedGraph(n, tuple((0, i, weight) for i in range(1, n)))


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """All-to-all graph on ``n`` nodes."""
    return WeightedGraph(
        n, tuple((i, j, weight) for i in range(n) for j in range(i + 1, n))
    )


def random_connected_graph(
    n: int,
    extra_edges: int = 0,
    weight_range: tuple[float, float] = (0.5, 1.5),
    rng: np.random.Generator | None = None,
) -> WeightedGraph:
    """Random connected graph: a random spanning tree plus extra edges.

    The tree attaches each node ``i >= 1`` to a uniformly chosen earlier
    node, which guarantees connectivity.  ``extra_edges`` additional
    distinct edges are then drawn uniformly from the remaining pairs, and
    all weights are uniform in ``weight_range``.
    """
    rng = np.random.default_rng() if rng is None else rng
    lo, hi = weight_range
    if not (0.0 < lo <= hi):
        raise ValueError("weight range must be positive")
    present = set()
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        present.add((j, i))
        edges.append((j, i, float(rng.uniform(lo, hi))))
    candidates = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if (i, j) not in present
    ]
    extra_edges = min(extra_edges, len(candidates))
    if extra_edges > 0:
        picks = rng.choice(len(candidates), size=extra_edges, replace=False)
        for idx in np.atleast_1d(picks):
            i, j = candidates[int(idx)]
            edges.append((i, j, float(rng.uniform(lo, hi))))
    return WeightedGraph(n, tuple(edges))


def calibrate_connectivity(graph: WeightedGraph, target: float) -> WeightedGraph:
    """Rescale all weights uniformly so the algebraic connectivity hits ``target``.

    The Laplacian is linear in a global weight scale, so a single ratio
    suffices.  Raises if the graph is disconnected.
    """
    if not target > 0.0:
        raise ValueError("target connectivity must be positive")
    current = algebraic_connectivity(graph)
    if current <= 1e-12:
        raise ValueError("cannot calibrate a disconnected graph")
    return graph.scaled(target / current)
