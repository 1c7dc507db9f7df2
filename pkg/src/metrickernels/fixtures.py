"""Bundled metric spaces referenced by name from tests and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .metric import FiniteMetricSpace, from_distance_matrix, from_graph, from_point_cloud

CIRCLE_POINTS = 200
GRAPH_NODES = 50
GRAPH_SEED = 20_240_501


def two_point() -> FiniteMetricSpace:
    return from_distance_matrix([[0.0, 1.0], [1.0, 0.0]])


def line3() -> FiniteMetricSpace:
    return from_point_cloud([[0.0], [1.0], [2.0]])


def circle_angles(n: int = CIRCLE_POINTS) -> np.ndarray:
    return 2 * math.pi * np.arange(n) / n


def circle(n: int = CIRCLE_POINTS) -> FiniteMetricSpace:
    """``n`` equally spaced points on the unit circle, geodesic distance."""
    i = np.arange(n)
    steps = np.abs(i[:, None] - i[None, :])
    steps = np.minimum(steps, n - steps)
    return from_distance_matrix(steps * (2 * math.pi / n))


def random_graph_edges(n: int = GRAPH_NODES, seed: int = GRAPH_SEED, extra: int = 50):
    """Random spanning tree plus ``extra`` chords, weights in ``[0.5, 2)``."""
    rng = np.random.default_rng(seed)
    edges = [(i, int(rng.integers(i)), float(rng.uniform(0.5, 2.0))) for i in range(1, n)]
    for _ in range(extra):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append((int(u), int(v), float(rng.uniform(0.5, 2.0))))
    return edges


def graph50() -> FiniteMetricSpace:
    return from_graph(random_graph_edges())


FIXTURES = {
    "two_point": two_point,
    "line3": line3,
    "circle200": circle,
    "graph50": graph50,
}


def load_fixture(name: str) -> FiniteMetricSpace:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise ValidationError(f"unknown fixture {name!r}; expected one of {sorted(FIXTURES)}") from None


def default_target(name: str):
    """Reference target function on a fixture, or ``None``.

    ``circle200`` uses ``|sin(theta)|``, 1-Lipschitz for the geodesic metric.
    """
    if name == "circle200":
        return np.abs(np.sin(circle_angles()))
    return None
