"""Greedy eta-coverings of a finite metric space by farthest-point selection."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import BudgetOutOfRange, EtaOutOfRange, ValidationError
from .metric import FiniteMetricSpace

COVER_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Covering:
    """Centers ``y_j`` (point indices), radius ``eta`` and region map.

    ``region_of[i]`` is the 0-based index ``j`` of the nearest center to
    point ``i``, ties going to the smallest ``j``.
    """

    centers: tuple[int, ...]
    eta: float
    region_of: np.ndarray

    @property
    def n_centers(self) -> int:
        return len(self.centers)

    def regions(self) -> list[np.ndarray]:
        """Point indices of each region, sorted ascending."""
        return [np.flatnonzero(self.region_of == j) for j in range(self.n_centers)]

    def to_dict(self) -> dict:
        return {
            "centers": [int(c) for c in self.centers],
            "eta": float(self.eta),
            "region_of": [int(r) for r in self.region_of],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, space: FiniteMetricSpace | None = None) -> "Covering":
        centers = tuple(int(c) for c in data["centers"])
        eta = float(data["eta"])
        if space is not None:
            cov = make_covering(space, centers, eta)
            if "region_of" in data and list(cov.region_of) != [int(r) for r in data["region_of"]]:
                raise ValidationError("region_of does not match the nearest-center assignment")
            return cov
        region = np.asarray(data["region_of"], dtype=int)
        region.setflags(write=False)
        return cls(centers, eta, region)


def assign_regions(space: FiniteMetricSpace, centers) -> np.ndarray:
    # np.argmin returns the first minimiser, which is the smallest-j tie-break.
    region = np.argmin(space.dist[:, list(centers)], axis=1)
    region.setflags(write=False)
    return region


def make_covering(space: FiniteMetricSpace, centers, eta: float) -> Covering:
    """Build and check a covering from explicit centers."""
    centers = tuple(space.check_index(c) for c in centers)
    if not centers:
        raise ValidationError("a covering needs at least one center")
    if len(set(centers)) != len(centers):
        raise ValidationError("covering centers must be distinct")
    if not eta > 0:
        raise EtaOutOfRange(f"eta must be > 0, got {eta!r}")
    region = assign_regions(space, centers)
    radius = space.dist[:, list(centers)].min(axis=1).max()
    if radius > eta + COVER_SLACK:
        raise ValidationError(f"centers leave a point at distance {radius:.9g} > eta={eta:.9g}")
    own = region[list(centers)]
    if not np.array_equal(own, np.arange(len(centers))):
        j = int(np.flatnonzero(own != np.arange(len(centers)))[0])
        raise ValidationError(f"center {centers[j]} is not in its own region (duplicate point?)")
    return Covering(centers, float(eta), region)


def farthest_point_order(space: FiniteMetricSpace, n: int, start: int = 0):
    """First ``n`` points of the farthest-point traversal from ``start``.

    Returns ``(order, radii)`` where ``radii[k]`` is the covering radius of
    the first ``k + 1`` selected points. Ties pick the smallest index.
    """
    d = space.dist
    order = [start]
    nearest = d[start].copy()
    radii = [float(nearest.max())]
    for _ in range(1, n):
        nxt = int(np.argmax(nearest))
        order.append(nxt)
        np.minimum(nearest, d[nxt], out=nearest)
        radii.append(float(nearest.max()))
    return order, radii


def _start(space, seed):
    if seed is None:
        return 0
    return int(np.random.default_rng(seed).integers(space.size))


def greedy_cover(space: FiniteMetricSpace, eta: float, *, seed: int | None = None) -> Covering:
    """Farthest-point greedy cover with radius ``eta``.

    Starts from point 0 (or a seeded random point) and keeps adding the
    point farthest from the current centers until every point is within
    ``eta`` of one.
    """
    D = space.diameter
    if not (0 < eta <= D):
        raise EtaOutOfRange(f"eta must lie in (0, D_X] = (0, {D:.9g}], got {eta!r}")
    d = space.dist
    centers = [_start(space, seed)]
    nearest = d[centers[0]].copy()
    while nearest.max() > eta:
        nxt = int(np.argmax(nearest))
        centers.append(nxt)
        np.minimum(nearest, d[nxt], out=nearest)
    return make_covering(space, centers, eta)


def cover_with_budget(space: FiniteMetricSpace, n_centers: int, *, seed: int | None = None) -> Covering:
    """Exactly ``n_centers`` rounds of farthest-point selection.

    ``eta`` is the achieved covering radius, bumped to the smallest positive
    pairwise distance when every point is a center.
    """
    m = space.size
    if not (1 <= n_centers <= m):
        raise BudgetOutOfRange(f"number of centers must lie in [1, {m}], got {n_centers}")
    order, radii = farthest_point_order(space, n_centers, _start(space, seed))
    # the k-th pick sat at distance radii[k-1] from earlier centers
    if n_centers > 1 and radii[-2] == 0:
        distinct = 1 + sum(r > 0 for r in radii[:-1])
        raise BudgetOutOfRange(
            f"the space has only {distinct} distinct points; cannot place {n_centers} centers"
        )
    eta = radii[-1]
    if eta == 0:
        d = space.dist
        positive = d[d > 0]
        if positive.size == 0:
            raise EtaOutOfRange("space has diameter 0; no positive covering radius exists")
        eta = float(positive.min())
    return make_covering(space, order, eta)
