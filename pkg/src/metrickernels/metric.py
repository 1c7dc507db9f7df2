"""Finite metric spaces: construction, validation and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import pdist, squareform

from .errors import (
    AsymmetryError,
    DisconnectedGraphError,
    EmptyInputError,
    IndexOutOfRange,
    InputFormatError,
    NegativeDistanceError,
    NonpositiveWeightError,
    NonzeroDiagonalError,
    SpaceTooLarge,
    TriangleViolation,
    ValidationError,
)

MAX_POINTS = 20_000
EXHAUSTIVE_TRIANGLE_LIMIT = 512
SAMPLED_TRIPLES = 1_000_000
FLOYD_WARSHALL_LIMIT = 1024
TRIANGLE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A validated metric on ``M`` indexed points.

    ``dist`` is stored dense and made read-only. Use the ``from_*``
    constructors rather than instantiating directly.
    """

    dist: np.ndarray
    labels: tuple | None = None
    diameter: float = field(init=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "diameter", float(d.max()) if d.size else 0.0)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def __len__(self):
        return self.size

    def check_index(self, i) -> int:
        i = int(i)
        if not 0 <= i < self.size:
            raise IndexOutOfRange(f"point index {i} outside [0, {self.size})")
        return i

    def to_csv(self, path) -> None:
        np.savetxt(path, self.dist, delimiter=",", fmt="%.17g")


def _as_square(matrix) -> np.ndarray:
    try:
        d = np.asarray(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"distance matrix is not numeric: {exc}") from None
    if d.size == 0:
        raise EmptyInputError("empty distance matrix")
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        i, j = map(int, np.argwhere(~np.isfinite(d))[0])
        raise ValidationError(f"non-finite distance at ({i}, {j})")
    if d.shape[0] > MAX_POINTS:
        raise SpaceTooLarge(f"{d.shape[0]} points exceeds the cap of {MAX_POINTS}")
    return d


def check_triangle(dist: np.ndarray, *, seed: int = 0, slack: float = TRIANGLE_SLACK) -> None:
    """Raise :class:`TriangleViolation` on the first violated triple found.

    Exhaustive for ``M <= 512``; otherwise ``10**6`` uniformly sampled triples.
    """
    m = dist.shape[0]
    tol = slack * max(float(dist.max()), 0.0)
    if m <= EXHAUSTIVE_TRIANGLE_LIMIT:
        for j in range(m):
            bad = dist > dist[:, j, None] + dist[None, j, :] + tol
            if bad.any():
                i, k = map(int, np.argwhere(bad)[0])
                raise TriangleViolation(
                    f"triangle inequality violated at (i, j, k) = ({i}, {j}, {k}): "
                    f"d[i,k]={dist[i, k]:.9g} > d[i,j]+d[j,k]={dist[i, j] + dist[j, k]:.9g}",
                )
        return
    rng = np.random.default_rng(seed)
    i, j, k = rng.integers(0, m, size=(3, SAMPLED_TRIPLES))
    bad = dist[i, k] > dist[i, j] + dist[j, k] + tol
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        raise TriangleViolation(
            f"triangle inequality violated at (i, j, k) = ({i[t]}, {j[t]}, {k[t]})"
        )


def from_distance_matrix(matrix, labels: Sequence | None = None) -> FiniteMetricSpace:
    """Validate a square matrix as a metric and wrap it."""
    d = _as_square(matrix)
    neg = np.argwhere(d < 0)
    if len(neg):
        i, j = map(int, neg[0])
        raise NegativeDistanceError(f"negative distance {d[i, j]!r} at ({i}, {j})")
    diag = np.flatnonzero(np.diag(d) != 0)
    if len(diag):
        i = int(diag[0])
        raise NonzeroDiagonalError(f"nonzero diagonal entry {d[i, i]!r} at ({i}, {i})")
    asym = np.argwhere(np.triu(d != d.T))
    if len(asym):
        i, j = map(int, asym[0])
        raise AsymmetryError(f"asymmetric distances at ({i}, {j}): {d[i, j]!r} != {d[j, i]!r}")
    check_triangle(d)
    return FiniteMetricSpace(d, _labels(labels, d.shape[0]))


def from_point_cloud(points, labels: Sequence | None = None) -> FiniteMetricSpace:
    """Euclidean distances between the rows of an ``M x d`` array."""
    p = np.asarray(points, dtype=float)
    if p.size == 0:
        raise EmptyInputError("empty point cloud")
    if p.ndim == 1:
        p = p.reshape(-1, 1)
    if p.ndim != 2:
        raise ValidationError(f"point cloud must be 2-D, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("point cloud contains non-finite coordinates")
    if p.shape[0] > MAX_POINTS:
        raise SpaceTooLarge(f"{p.shape[0]} points exceeds the cap of {MAX_POINTS}")
    d = squareform(pdist(p)) if p.shape[0] > 1 else np.zeros((1, 1))
    return FiniteMetricSpace(d, _labels(labels, p.shape[0]))


def from_graph(edges: Iterable, n_nodes: int | None = None) -> FiniteMetricSpace:
    """Shortest-path metric of an undirected weighted graph.

    ``edges`` is an iterable of ``(u, v, weight)``; nodes are ``0..n-1``
    where ``n`` defaults to one past the largest index seen. Parallel edges
    keep their smallest weight.
    """
    e = [(int(u), int(v), float(w)) for u, v, w in edges]
    if not e:
        raise EmptyInputError("empty edge list")
    for u, v, w in e:
        if u < 0 or v < 0:
            raise ValidationError(f"negative node index in edge ({u}, {v})")
        if not (w > 0) or not math.isfinite(w):
            raise NonpositiveWeightError(f"edge ({u}, {v}) has weight {w!r}; weights must be > 0")
    n = max(max(u, v) for u, v, _ in e) + 1
    if n_nodes is not None:
        if n_nodes < n:
            raise ValidationError(f"n_nodes={n_nodes} but edges reference node {n - 1}")
        n = n_nodes
    if n > MAX_POINTS:
        raise SpaceTooLarge(f"{n} nodes exceeds the cap of {MAX_POINTS}")

    best: dict[tuple[int, int], float] = {}
    for u, v, w in e:
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        best[key] = min(w, best.get(key, math.inf))
    if best:
        rows, cols = zip(*best.keys())
        weights = list(best.values())
    else:
        rows, cols, weights = (), (), ()
    adj = coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
    method = "FW" if n <= FLOYD_WARSHALL_LIMIT else "D"
    d = shortest_path(adj, method=method, directed=False)
    if not np.all(np.isfinite(d)):
        i, j = map(int, np.argwhere(~np.isfinite(d))[0])
        raise DisconnectedGraphError(f"graph is disconnected: no path between {i} and {j}")
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d)


def _labels(labels, m):
    if labels is None:
        return None
    labels = tuple(labels)
    if len(labels) != m:
        raise ValidationError(f"{len(labels)} labels for {m} points")
    return labels


# CSV ingestion

def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            return [(n, row) for n, row in enumerate(csv.reader(fh), start=1)]
    except OSError as exc:
        raise InputFormatError(str(exc), path=path) from None
    except (csv.Error, UnicodeDecodeError) as exc:
        raise InputFormatError(f"cannot parse CSV: {exc}", path=path) from None


def _floats(path, line, row):
    try:
        return [float(x) for x in row]
    except ValueError:
        raise InputFormatError(f"non-numeric value in row {row!r}", path=path, line=line) from None


def _numeric_table(path):
    rows = [(n, r) for n, r in _read_rows(path) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError("file contains no data", path=path)
    width = len(rows[0][1])
    table = []
    for n, r in rows:
        if len(r) != width:
            raise InputFormatError(f"expected {width} columns, got {len(r)}", path=path, line=n)
        table.append(_floats(path, n, r))
    return table


def read_distance_csv(path) -> FiniteMetricSpace:
    """Comma-separated ``M x M`` distance matrix without header."""
    table = _numeric_table(path)
    if len(table) != len(table[0]):
        raise InputFormatError(f"distance matrix is {len(table)}x{len(table[0])}, not square", path=path)
    return from_distance_matrix(table)


def read_point_cloud_csv(path) -> FiniteMetricSpace:
    """One point per row, comma-separated coordinates, no header."""
    return from_point_cloud(_numeric_table(path))


def read_edge_list_csv(path) -> FiniteMetricSpace:
    """Edge list with header ``u,v,w``; 0-based node indices."""
    rows = [(n, r) for n, r in _read_rows(path) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError("file contains no data", path=path)
    header = [c.strip() for c in rows[0][1]]
    if header != ["u", "v", "w"]:
        raise InputFormatError(f"expected header 'u,v,w', got {','.join(header)!r}", path=path, line=rows[0][0])
    edges = []
    for n, r in rows[1:]:
        if len(r) != 3:
            raise InputFormatError(f"expected 3 columns, got {len(r)}", path=path, line=n)
        u, v, w = _floats(path, n, r)
        if u != int(u) or v != int(v):
            raise InputFormatError("node indices must be integers", path=path, line=n)
        edges.append((int(u), int(v), w))
    return from_graph(edges)


READERS = {
    "matrix": read_distance_csv,
    "cloud": read_point_cloud_csv,
    "graph": read_edge_list_csv,
}


def load_space(path, kind: str = "matrix") -> FiniteMetricSpace:
    try:
        reader = READERS[kind]
    except KeyError:
        raise ValidationError(f"unknown space kind {kind!r}; expected one of {sorted(READERS)}") from None
    return reader(path)
