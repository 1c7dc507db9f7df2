"""Consumers of the kernels: MMD, the mean-embedding functional, kernel
ridge regression and refinement sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .covering import greedy_cover
from .embedding import check_q, default_q
from .errors import (
    MeasureSpaceMismatch,
    NegativeRadicand,
    SolveFailure,
    ValidationError,
)
from .formatting import fmt
from .kernel import KernelModel, cross_kernel, gram, psd_check
from .metric import FiniteMetricSpace
from .scalar import ScalarKernelSpec

RADICAND_CLAMP = -1e-10
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finitely supported probability measure on point indices."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if s.size == 0:
            raise ValidationError("a measure needs at least one support point")
        if s.shape != w.shape:
            raise ValidationError(f"{s.size} support points but {w.size} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("measure weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1) > WEIGHT_TOL:
            raise ValidationError(f"measure weights sum to {math.fsum(w)!r}, not 1")
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, x: int) -> "EmpiricalMeasure":
        return cls([x], [1.0])

    @classmethod
    def uniform(cls, points: Sequence[int]) -> "EmpiricalMeasure":
        points = list(points)
        return cls(points, np.full(len(points), 1 / len(points)) if points else [])

    @classmethod
    def parse(cls, text: str) -> "EmpiricalMeasure":
        """Parse ``"i:w,j:w,..."``; a bare ``"i,j"`` means uniform weights."""
        items = [t.strip() for t in text.split(",") if t.strip()]
        try:
            if all(":" not in t for t in items):
                return cls.uniform([int(t) for t in items])
            pairs = [t.split(":") for t in items]
            return cls([int(i) for i, _ in pairs], [float(w) for _, w in pairs])
        except ValueError:
            raise ValidationError(f"cannot parse measure {text!r}; expected 'i:w,j:w,...'") from None

    def check(self, space: FiniteMetricSpace) -> None:
        if self.support.min() < 0 or self.support.max() >= space.size:
            raise MeasureSpaceMismatch(
                f"measure support {self.support.tolist()} is not inside a space of {space.size} points"
            )

    def mix(self, other: "EmpiricalMeasure", t: float) -> "EmpiricalMeasure":
        """The convex combination ``(1 - t) self + t other``."""
        return EmpiricalMeasure(
            np.concatenate([self.support, other.support]),
            np.concatenate([(1 - t) * self.weights, t * other.weights]),
        )


def _signed_weights(mu: EmpiricalMeasure, nu: EmpiricalMeasure):
    # aggregate mu - nu on the union of supports so that mu == nu gives exact zeros
    points = np.union1d(mu.support, nu.support)
    c = np.zeros(len(points))
    np.add.at(c, np.searchsorted(points, mu.support), mu.weights)
    np.add.at(c, np.searchsorted(points, nu.support), -nu.weights)
    return points, c


def mean_inner(model: KernelModel, mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """``<M(mu), M(nu)>_H = sum_ij w_i v_j k(x_i, z_j)``."""
    mu.check(model.space)
    nu.check(model.space)
    k = cross_kernel(model, mu.support, nu.support)
    return float(mu.weights @ k @ nu.weights)


def functional_F(model: KernelModel, mu: EmpiricalMeasure) -> float:
    """Squared RKHS norm of the kernel mean embedding of ``mu``."""
    mu.check(model.space)
    g = gram(model, mu.support).entries
    return float(mu.weights @ g @ mu.weights)


def mmd_sq(model: KernelModel, mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Raw ``||M(mu) - M(nu)||^2`` (may round slightly negative)."""
    mu.check(model.space)
    nu.check(model.space)
    points, c = _signed_weights(mu, nu)
    if not np.any(c):
        return 0.0
    g = gram(model, points).entries
    return float(c @ g @ c)


def mmd(model: KernelModel, mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Maximum mean discrepancy between two empirical measures."""
    r = mmd_sq(model, mu, nu)
    if r < RADICAND_CLAMP:
        raise NegativeRadicand(f"MMD radicand {r:.3g} is below {RADICAND_CLAMP:g}; the Gram matrix is not PSD")
    return math.sqrt(max(r, 0.0))


@dataclass(frozen=True, eq=False)
class KRRFit:
    train: np.ndarray
    coef: np.ndarray
    ridge: float
    norm_sq: float

    @property
    def rkhs_norm(self) -> float:
        return math.sqrt(max(self.norm_sq, 0.0))

    def predict(self, model: KernelModel, points: Sequence[int] | None = None) -> np.ndarray:
        points = range(model.space.size) if points is None else points
        return cross_kernel(model, list(points), self.train) @ self.coef


def krr_fit(model: KernelModel, train: Sequence[int], targets, ridge: float, *, check_psd: bool = True) -> KRRFit:
    """Solve ``(G + ridge I) c = targets`` by Cholesky.

    ``norm_sq = c^T G c`` is the RKHS norm of the fitted function.
    """
    if not ridge > 0:
        raise ValidationError(f"ridge must be > 0, got {ridge!r}")
    train = np.asarray(train, dtype=np.int64)
    y = np.asarray(targets, dtype=float)
    if y.shape != train.shape:
        raise ValidationError(f"{train.size} training points but {y.size} targets")
    gm = gram(model, train)
    if check_psd and not psd_check(gm).passed:
        raise SolveFailure(f"training Gram matrix is not PSD (min eigenvalue {gm.min_eigenvalue:.3g})")
    g = gm.entries
    try:
        factor = cho_factor(g + ridge * np.eye(len(train)), lower=True)
    except LinAlgError as exc:
        raise SolveFailure(f"Cholesky factorisation failed: {exc}") from None
    coef = cho_solve(factor, y)
    return KRRFit(train, coef, float(ridge), float(coef @ g @ coef))


# sweeps

SWEEP_COLUMNS = ("param", "J", "rho", "train_err", "sup_err", "krr_norm")


@dataclass
class SweepReport:
    """One row per grid value, sorted by the swept parameter.

    ``krr_norm`` is the RKHS norm of the ridge fit, a computable proxy for
    the norm of the best approximant; ``J`` is the feature dimension
    (centers in covering mode, ``N`` in truncation mode).
    """

    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([fmt(r[c]) if isinstance(r[c], float) else r[c] for c in SWEEP_COLUMNS])

    def write(self, csv_path, json_path) -> None:
        self.to_csv(csv_path)
        with open(json_path, "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def train_split(n_points: int, seed: int) -> np.ndarray:
    """Uniform half of the points (at least one), sorted."""
    rng = np.random.default_rng(seed)
    size = max(1, n_points // 2)
    return np.sort(rng.choice(n_points, size=size, replace=False))


def universality_sweep(
    space: FiniteMetricSpace,
    scalar: ScalarKernelSpec,
    f,
    grid: Sequence[float],
    *,
    mode: str = "covering",
    q: float | None = None,
    ridge: float = 1e-6,
    seed: int = 0,
    cover_seed: int | None = None,
    space_id: str = "",
) -> SweepReport:
    """Fit ridge regression at each refinement level and record sup errors.

    ``grid`` holds covering radii ``eta`` (covering mode) or truncation
    lengths ``N`` (truncation mode). With ``q=None`` each covering level
    uses the midpoint of its admissible interval; truncation defaults to
    ``q = 2``. The train half is drawn once from ``seed``. Covers start
    at point 0 unless ``cover_seed`` asks for a randomized start.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (space.size,):
        raise ValidationError(f"target has shape {f.shape}, expected ({space.size},)")
    grid = list(grid)
    if not grid:
        raise ValidationError("sweep grid is empty")
    if mode not in ("covering", "truncation"):
        raise ValidationError(f"unknown mode {mode!r}")
    train = train_split(space.size, seed)
    rows = []
    for value in sorted(grid):
        if mode == "covering":
            cov = greedy_cover(space, float(value), seed=cover_seed)
            level_q = default_q(cov.n_centers) if q is None else check_q(q, cov.n_centers)
            model = KernelModel.with_covering(space, scalar, cov, level_q)
            dim, param = cov.n_centers, float(value)
        else:
            model = KernelModel.with_truncation(space, scalar, int(value), 2.0 if q is None else q)
            dim, param = int(value), int(value)
        fit = krr_fit(model, train, f[train], ridge)
        err = np.abs(fit.predict(model) - f)
        rows.append({
            "param": param,
            "J": dim,
            "rho": float(model.rho),
            "train_err": float(err[train].max()),
            "sup_err": float(err.max()),
            "krr_norm": fit.rkhs_norm,
            "q": float(model.q),
        })
    metadata = {
        "space": space_id,
        "n_points": space.size,
        "diameter": space.diameter,
        "kernel": scalar.to_dict(),
        "mode": mode,
        "q": "auto" if q is None else q,
        "ridge": ridge,
        "seed": seed,
        "cover_seed": cover_seed,
        "n_train": int(train.size),
        "krr_norm_note": "RKHS norm of the ridge fit, a proxy for the minimal-norm approximant",
    }
    return SweepReport(rows, metadata)
