"""Weighted directed communication graphs for diffusion filtering.

A network of n sensors is described by a weighted adjacency matrix whose
entry (i, j) is the weight sensor j applies to information received from
sensor i.  The diffusion combine step requires the graph to be balanced
(all row and column sums equal one) and strongly connected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BALANCE_TOL = 1e-12

__all__ = [
    "AdjacencyMatrix",
    "ValidationReport",
    "GraphDimensionError",
    "InvalidGraphError",
    "NotStronglyConnectedError",
    "validate",
    "diameter",
    "matrix_power",
    "min_hop_weight",
    "kron_expand",
]


class GraphDimensionError(ValueError):
    """Adjacency input is not a square 2-D matrix."""


class InvalidGraphError(ValueError):
    """Adjacency matrix fails a required structural property."""


class NotStronglyConnectedError(InvalidGraphError):
    """Operation requires strong connectivity and the graph lacks it."""


@dataclass(frozen=True)
class ValidationReport:
    nonnegative: bool
    balanced: bool
    strongly_connected: bool

    @property
    def ok(self) -> bool:
        return self.nonnegative and self.balanced and self.strongly_connected

    def failed_flags(self) -> list[str]:
        return [
            name
            for name in ("nonnegative", "balanced", "strongly_connected")
            if not getattr(self, name)
        ]


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Immutable weighted digraph over ``n`` sensors.

    ``weights[i, j] > 0`` iff there is an arrow from sensor i to sensor j.
    Self-loops are permitted; a zero diagonal is also accepted as long as
    the graph is balanced and strongly connected.
    """

    weights: np.ndarray = field()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise GraphDimensionError(
                f"adjacency must be a square n x n matrix with n >= 1, got shape {w.shape}"
            )
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Boolean arrow matrix (positive entries only; weights play no role)."""
        return self.weights > 0.0

    @classmethod
    def validated(cls, weights) -> "AdjacencyMatrix":
        """Construct and require all structural properties, else raise."""
        adj = cls(weights)
        report = validate(adj)
        if not report.ok:
            raise InvalidGraphError(
                "adjacency matrix failed validation: " + ", ".join(report.failed_flags())
            )
        return adj


def _shortest_path_lengths(support: np.ndarray, source: int) -> np.ndarray:
    """Directed BFS distances from ``source``; unreachable nodes get -1."""
    n = support.shape[0]
    dist = np.full(n, -1, dtype=int)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(support[u]):
                if dist[v] < 0:
                    dist[v] = d
                    nxt.append(int(v))
        frontier = nxt
    return dist


def _strongly_connected(support: np.ndarray) -> bool:
    if support.shape[0] == 1:
        return True
    forward = _shortest_path_lengths(support, 0)
    backward = _shortest_path_lengths(support.T, 0)
    return bool((forward >= 0).all() and (backward >= 0).all())


def validate(adj: AdjacencyMatrix) -> ValidationReport:
    """Check nonnegativity, balance (tolerance 1e-12), and strong connectivity."""
    w = adj.weights
    nonneg = bool((w >= 0.0).all())
    rows = w.sum(axis=1)
    cols = w.sum(axis=0)
    balanced = bool(
        np.abs(rows - 1.0).max() <= BALANCE_TOL and np.abs(cols - 1.0).max() <= BALANCE_TOL
    )
    return ValidationReport(
        nonnegative=nonneg,
        balanced=balanced,
        strongly_connected=_strongly_connected(adj.support),
    )


def diameter(adj: AdjacencyMatrix) -> int:
    """Longest shortest directed path between distinct sensors.

    Returns 0 for a single-node graph (no ordered pairs exist); consumers
    that need a positive hop count clamp to 1 in that case.
    """
    support = adj.support
    n = adj.n
    if n == 1:
        return 0
    worst = 0
    for source in range(n):
        dist = _shortest_path_lengths(support, source)
        others = np.delete(dist, source)
        if (others < 0).any():
            raise NotStronglyConnectedError(
                f"diameter undefined: sensor {source} cannot reach every other sensor"
            )
        worst = max(worst, int(others.max()))
    return worst


def matrix_power(adj: AdjacencyMatrix, s: int) -> np.ndarray:
    """Return the s-th power of the weight matrix, s >= 1.

    For a balanced strongly connected graph and s at least the diameter,
    every entry is strictly positive.
    """
    if s < 1:
        raise ValueError(f"power must be >= 1, got {s}")
    return np.linalg.matrix_power(adj.weights, s)


def min_hop_weight(adj: AdjacencyMatrix) -> float:
    """Smallest entry of the weight matrix raised to the graph diameter.

    Strictly positive for balanced, strongly connected graphs; this is the
    worst-case weight with which any sensor's information reaches any other
    sensor after diameter-many diffusion rounds.
    """
    report = validate(adj)
    if not report.strongly_connected:
        raise NotStronglyConnectedError("min_hop_weight requires a strongly connected graph")
    if not report.balanced:
        raise InvalidGraphError("min_hop_weight requires a balanced graph")
    hops = max(diameter(adj), 1)
    return float(matrix_power(adj, hops).min())


def kron_expand(adj: AdjacencyMatrix, m: int) -> np.ndarray:
    """Kronecker product of the weights with the m x m identity (block weights)."""
    if m < 1:
        raise ValueError(f"block dimension must be >= 1, got {m}")
    return np.kron(adj.weights, np.eye(m))
