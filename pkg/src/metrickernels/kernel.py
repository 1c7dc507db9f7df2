"""Tractable kernels on a finite metric space and their certificates.

Covering mode evaluates ``k_hat(x, y) = K(<phi_hat(x), phi_hat(y)>)``
(Taylor) or ``K(||phi_hat(x) - phi_hat(y)||^2)`` (radial); truncation mode
does the same with the ``N``-term truncated embedding ``phi_t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .covering import Covering
from .embedding import (
    BoundedValue,
    EmbeddingContext,
    check_q,
    cyclic_basis,
    default_prefix,
    default_q,
    phi_hat_matrix,
    phi_prefix_matrix,
    tail_sq_bound,
)
from .errors import (
    ConfigMismatch,
    EmptySubset,
    InsufficientPrefix,
    NonSymmetricInput,
    NOutOfRange,
    QOutOfRange,
    ValidationError,
)
from .formatting import fmt
from .metric import FiniteMetricSpace
from .scalar import (
    SERIES_RTOL,
    RadialSpec,
    ScalarKernelSpec,
    TaylorSpec,
    derivative_bound,
    radial_eval,
    taylor_eval,
)

PSD_RTOL = 1e-8
CERTIFY_SLACK = 1e-6
DIAGNOSTIC_TAIL = 1e-10
MAX_DIAGNOSTIC_TAIL = 1e-8
DEFAULT_PREFIX_CAP = 200_000
PAIRWISE_SUM_THRESHOLD = 10_000
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CoveringMode:
    covering: Covering
    q: float


@dataclass(frozen=True, eq=False)
class TruncationMode:
    N: int
    q: float
    basis: np.ndarray


@dataclass(frozen=True, eq=False)
class KernelModel:
    """A scalar kernel composed with a covering or truncation embedding.

    Build with :meth:`with_covering` or :meth:`with_truncation`.
    """

    space: FiniteMetricSpace
    scalar: ScalarKernelSpec
    mode: CoveringMode | TruncationMode
    c_k: float = field(init=False)

    def __post_init__(self):
        D = self.space.diameter
        if not D > 0:
            raise ValidationError("kernel construction needs a space with positive diameter")
        if isinstance(self.scalar, TaylorSpec):
            # every inner product met in the analysis is bounded by 4 D_X^2
            object.__setattr__(self, "scalar", self.scalar.with_domain(4 * D * D))
        object.__setattr__(self, "c_k", derivative_bound(self.scalar, D))

    @classmethod
    def with_covering(cls, space, scalar, covering: Covering, q: float | None = None) -> "KernelModel":
        J = covering.n_centers
        q = default_q(J) if q is None else check_q(q, J)
        if not covering.eta <= space.diameter:
            raise ValidationError(f"covering radius {covering.eta:.9g} exceeds D_X={space.diameter:.9g}")
        return cls(space, scalar, CoveringMode(covering, q))

    @classmethod
    def with_truncation(cls, space, scalar, N: int, q: float = 2.0, basis=None) -> "KernelModel":
        if N < 2:
            raise NOutOfRange(f"truncation length must be >= 2, got {N}")
        if not q > 1:
            raise QOutOfRange(f"q must be > 1, got {q!r}")
        basis = np.arange(space.size) if basis is None else np.asarray(basis, dtype=np.int64)
        for b in basis:
            space.check_index(b)
        basis = cyclic_basis(basis, N)
        basis.setflags(write=False)
        return cls(space, scalar, TruncationMode(int(N), float(q), basis))

    @property
    def is_taylor(self) -> bool:
        return isinstance(self.scalar, TaylorSpec)

    @property
    def diameter(self) -> float:
        return self.space.diameter

    @property
    def q(self) -> float:
        return self.mode.q

    @property
    def rho(self) -> float:
        return rho_bound(self)

    def features(self, points=None) -> np.ndarray:
        """Finite-dimensional feature rows: ``phi_hat`` or ``phi_t``."""
        if isinstance(self.mode, CoveringMode):
            return phi_hat_matrix(self.space, self.mode.covering, points)
        return phi_prefix_matrix(self.space, self.mode.basis, self.mode.q, self.mode.N, points)

    def apply_scalar(self, t):
        if self.is_taylor:
            return taylor_eval(self.scalar, t)
        return radial_eval(self.scalar, t)

    def __call__(self, x: int, y: int) -> float:
        return kernel_value(self, x, y)

    def describe(self) -> dict:
        out = {
            "kernel": self.scalar.to_dict(),
            "diameter": self.diameter,
            "q": self.q,
            "c_k": self.c_k,
            "rho": self.rho,
        }
        if isinstance(self.mode, CoveringMode):
            out.update(mode="covering", eta=self.mode.covering.eta, n_centers=self.mode.covering.n_centers)
        else:
            out.update(mode="truncation", N=self.mode.N)
        return out


def _argument(model: KernelModel, fx: np.ndarray, fy: np.ndarray) -> float:
    if model.is_taylor:
        return math.fsum(fx * fy)
    diff = fx - fy
    return math.fsum(diff * diff)


def kernel_value(model: KernelModel, x: int, y: int) -> float:
    x, y = model.space.check_index(x), model.space.check_index(y)
    f = model.features([x, y])
    return float(model.apply_scalar(_argument(model, f[0], f[1])))


def k_hat(model: KernelModel, x: int, y: int) -> float:
    """Covering kernel ``k_hat(x, y)``."""
    if not isinstance(model.mode, CoveringMode):
        raise ConfigMismatch("k_hat needs a covering-mode model")
    return kernel_value(model, x, y)


def k_t_eval(model: KernelModel, x: int, y: int) -> float:
    """Truncated kernel ``k_t(x, y)``."""
    if not isinstance(model.mode, TruncationMode):
        raise ConfigMismatch("k_t_eval needs a truncation-mode model")
    return kernel_value(model, x, y)


# Gram matrices

def _pairwise_arguments(model: KernelModel, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Inner products (Taylor) or squared distances (radial) between rows.

    Long rows go through numpy's pairwise summation instead of BLAS.
    """
    width = fa.shape[1]
    if model.is_taylor and width <= PAIRWISE_SUM_THRESHOLD:
        return fa @ fb.T
    out = np.empty((fa.shape[0], fb.shape[0]))
    step = max(1, 4_000_000 // max(1, fb.shape[0] * width))
    for start in range(0, fa.shape[0], step):
        rows = slice(start, start + step)
        if model.is_taylor:
            out[rows] = np.sum(fa[rows, None, :] * fb[None, :, :], axis=-1)
        else:
            diff = fa[rows, None, :] - fb[None, :, :]
            out[rows] = np.sum(diff * diff, axis=-1)
    return out


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    points: tuple[int, ...]

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            for row in self.entries:
                fh.write(",".join(fmt(v) for v in row) + "\n")

    def to_json(self) -> str:
        return json.dumps({"points": list(self.points), "entries": self.entries.tolist()})


def gram(model: KernelModel, subset: Sequence[int] | None = None) -> GramMatrix:
    """Kernel matrix over ``subset`` (default: every point).

    The upper triangle is mirrored so the result is exactly symmetric.
    """
    points = tuple(range(model.space.size)) if subset is None else tuple(int(p) for p in subset)
    if not points:
        raise EmptySubset("Gram matrix needs a nonempty subset")
    for p in points:
        model.space.check_index(p)
    f = model.features(points)
    args = _pairwise_arguments(model, f, f)
    if not model.is_taylor:
        np.fill_diagonal(args, 0.0)
        np.maximum(args, 0.0, out=args)
    args = np.triu(args) + np.triu(args, 1).T
    entries = np.asarray(model.apply_scalar(args), dtype=float)
    entries.setflags(write=False)
    return GramMatrix(entries, points)


def cross_kernel(model: KernelModel, xs: Sequence[int], ys: Sequence[int]) -> np.ndarray:
    """Rectangular block ``[k(x, y)]`` for prediction and MMD cross terms."""
    fx, fy = model.features(list(xs)), model.features(list(ys))
    args = _pairwise_arguments(model, fx, fy)
    if not model.is_taylor:
        np.maximum(args, 0.0, out=args)
    return np.asarray(model.apply_scalar(args), dtype=float)


@dataclass(frozen=True)
class PSDReport:
    min_eigenvalue: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "tolerance": self.tolerance, "pass": self.passed}


def psd_check(matrix) -> PSDReport:
    """Smallest eigenvalue against ``-1e-8 * max(1, max diagonal)``."""
    lam = None
    if isinstance(matrix, GramMatrix):
        g, lam = matrix.entries, matrix.min_eigenvalue
    else:
        g = np.asarray(matrix, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.size == 0:
        raise NonSymmetricInput(f"expected a nonempty square matrix, got shape {g.shape}")
    scale = max(1.0, float(np.max(np.abs(g))))
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * scale):
        i, j = map(int, np.argwhere(~np.isclose(g, g.T, rtol=0, atol=1e-12 * scale))[0])
        raise NonSymmetricInput(f"matrix is not symmetric at ({i}, {j})")
    if lam is None:
        lam = float(np.linalg.eigvalsh(g)[0])
    tol = PSD_RTOL * max(1.0, float(np.max(np.diag(g))))
    return PSDReport(lam, tol, bool(lam >= -tol))


# error constants and certificates

def rho_bound(model: KernelModel) -> float:
    """Sup-norm transfer constant between the exact and tractable RKHS.

    Covering: ``sqrt(eta) sqrt(2 D_X C_K')`` (Taylor), ``eta sqrt(2 C_K')``
    (radial). Truncation: ``q^(-N/2) D_X sqrt(2 C_K')`` (Taylor),
    ``q^(-N) D_X sqrt(2 C_K')`` (radial).
    """
    c, D = model.c_k, model.diameter
    if isinstance(model.mode, CoveringMode):
        eta = model.mode.covering.eta
        if model.is_taylor:
            return math.sqrt(eta) * math.sqrt(2 * D * c)
        return eta * math.sqrt(2 * c)
    q, N = model.mode.q, model.mode.N
    if model.is_taylor:
        return q ** (-N / 2) * D * math.sqrt(2 * c)
    return q ** (-N) * D * math.sqrt(2 * c)


def embedding_gap_bound(model: KernelModel) -> float:
    """A priori bound on ``||phi(x) - surrogate(x)||_l2``: ``eta`` or ``D_X q^-N``."""
    if isinstance(model.mode, CoveringMode):
        return model.mode.covering.eta
    return model.diameter * model.mode.q ** (-model.mode.N)


def diagnostic_prefix(model: KernelModel, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> int:
    """Prefix length for certificates.

    Default: the smallest ``n`` with ``D_X^2 q^(-2n) <= 1e-10``. An explicit
    ``n_diag`` must reach a tail below ``1e-8``; either way ``n <= cap``.
    """
    D, q = model.diameter, model.q
    if n_diag is None:
        n = default_prefix(D, q, DIAGNOSTIC_TAIL)
        if isinstance(model.mode, TruncationMode):
            n = max(n, model.mode.N)
    else:
        n = int(n_diag)
        if tail_sq_bound(D, q, n) > MAX_DIAGNOSTIC_TAIL:
            raise InsufficientPrefix(
                f"prefix {n} leaves a tail of {tail_sq_bound(D, q, n):.3g} > {MAX_DIAGNOSTIC_TAIL:g}"
            )
    if n > cap:
        raise InsufficientPrefix(f"certificate needs a prefix of {n} terms, above the cap of {cap}")
    if isinstance(model.mode, TruncationMode) and n < model.mode.N:
        raise InsufficientPrefix(f"prefix {n} is shorter than the truncation length {model.mode.N}")
    return n


def embedding_context(model: KernelModel, n: int) -> EmbeddingContext:
    if isinstance(model.mode, CoveringMode):
        return EmbeddingContext.for_covering(model.space, model.mode.covering, model.q, n)
    return EmbeddingContext.for_truncation(model.space, model.q, model.mode.N, n, model.mode.basis)


def _surrogate_kind(model):
    return "b_phi_hat" if isinstance(model.mode, CoveringMode) else "bt_phi_t"


def _sum_slack(n, scale):
    # forward error of a length-n float sum of terms bounded by `scale`
    return (n + 4) * _EPS * scale


def embedding_gaps(model: KernelModel, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> list[BoundedValue]:
    """Certified ``||phi(x) - surrogate(x)||_l2`` for every point."""
    n = diagnostic_prefix(model, n_diag, cap=cap)
    ctx = embedding_context(model, n)
    a = ctx.prefix_matrix("phi", n)
    b = ctx.prefix_matrix(_surrogate_kind(model), n)
    D2 = model.diameter**2
    sq = np.sum((a - b) ** 2, axis=1)
    tail = tail_sq_bound(model.diameter, model.q, n) + _sum_slack(n, D2)
    return [
        BoundedValue.from_interval(math.sqrt(max(s - tail, 0.0)), math.sqrt(s + tail))
        for s in sq
    ]


def _k_slack(value):
    return SERIES_RTOL * (1 + abs(value)) + 8 * _EPS * abs(value)


def feature_distances_sq(model: KernelModel, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> list[BoundedValue]:
    """Certified ``||Phi(x) - Phi_surrogate(x)||^2_{H_W}`` for every point.

    Expanded as ``k_W(a, a) - 2 k_W(a, b) + k_W(b, b)`` with
    ``a = phi(x)`` and ``b`` the surrogate sequence. Prefix half-widths on
    the l2 arguments go through ``K`` with its Lipschitz constant ``C_K'``.
    """
    n = diagnostic_prefix(model, n_diag, cap=cap)
    ctx = embedding_context(model, n)
    a = ctx.prefix_matrix("phi", n)
    b = ctx.prefix_matrix(_surrogate_kind(model), n)
    D2 = model.diameter**2
    hw = tail_sq_bound(model.diameter, model.q, n) + _sum_slack(n, D2)
    c = model.c_k
    out = []
    if model.is_taylor:
        args = np.stack([np.sum(a * a, axis=1), np.sum(a * b, axis=1), np.sum(b * b, axis=1)])
        kaa, kab, kbb = taylor_eval(model.scalar, args)
        for x in range(a.shape[0]):
            value = kaa[x] - 2 * kab[x] + kbb[x]
            half = 4 * c * hw + _k_slack(kaa[x]) + 2 * _k_slack(kab[x]) + _k_slack(kbb[x])
            out.append(BoundedValue(float(value), float(half)))
    else:
        k0 = model.scalar.total_mass
        sq = np.sum((a - b) ** 2, axis=1)
        for s in sq:
            ks = radial_eval(model.scalar, float(s))
            value = 2 * (k0 - ks)
            half = 2 * c * hw + 2 * (_k_slack(k0) + _k_slack(ks))
            out.append(BoundedValue(value, half))
    return out


def feature_distance_sq(model: KernelModel, x: int, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> BoundedValue:
    """Single-point form of :func:`feature_distances_sq`."""
    x = model.space.check_index(x)
    n = diagnostic_prefix(model, n_diag, cap=cap)
    ctx = embedding_context(model, n)
    a = ctx.phi(x).prefix(n)
    b = ctx.sequence(_surrogate_kind(model), x).prefix(n)
    hw = tail_sq_bound(model.diameter, model.q, n) + _sum_slack(n, model.diameter**2)
    c = model.c_k
    if model.is_taylor:
        ks = [taylor_eval(model.scalar, math.fsum(u * v)) for u, v in ((a, a), (a, b), (b, b))]
        half = 4 * c * hw + _k_slack(ks[0]) + 2 * _k_slack(ks[1]) + _k_slack(ks[2])
        return BoundedValue(ks[0] - 2 * ks[1] + ks[2], half)
    k0 = model.scalar.total_mass
    ks = radial_eval(model.scalar, math.fsum((a - b) ** 2))
    return BoundedValue(2 * (k0 - ks), 2 * c * hw + 2 * (_k_slack(k0) + _k_slack(ks)))


def k_bounded(model: KernelModel, x: int, y: int, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> BoundedValue:
    """The exact (intractable) kernel ``k_W(phi(x), phi(y))`` as an interval."""
    x, y = model.space.check_index(x), model.space.check_index(y)
    n = diagnostic_prefix(model, n_diag, cap=cap)
    ctx = embedding_context(model, n)
    a, b = ctx.phi(x).prefix(n), ctx.phi(y).prefix(n)
    hw = tail_sq_bound(model.diameter, model.q, n) + _sum_slack(n, model.diameter**2)
    t = math.fsum(a * b) if model.is_taylor else math.fsum((a - b) ** 2)
    k = float(model.apply_scalar(t))
    return BoundedValue(k, model.c_k * hw + _k_slack(k))


@dataclass(frozen=True)
class PointCertificate:
    point: int
    interval: tuple[float, float]
    rho_sq: float
    passed: bool

    def to_dict(self) -> dict:
        return {"point": self.point, "interval": list(self.interval), "rho_sq": self.rho_sq, "pass": self.passed}


@dataclass(frozen=True)
class CertificationReport:
    rho: float
    prefix: int
    points: tuple[PointCertificate, ...]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def failures(self) -> list[int]:
        return [p.point for p in self.points if not p.passed]

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "rho_sq": self.rho**2,
            "prefix": self.prefix,
            "pass": self.passed,
            "points": [p.to_dict() for p in self.points],
        }


def certify(model: KernelModel, n_diag: int | None = None, *, cap: int = DEFAULT_PREFIX_CAP) -> CertificationReport:
    """Check ``||Phi(x) - Phi_surrogate(x)||^2 <= rho^2 + 1e-6`` at every point."""
    n = diagnostic_prefix(model, n_diag, cap=cap)
    rho = rho_bound(model)
    rows = []
    for x, bv in enumerate(feature_distances_sq(model, n, cap=cap)):
        lo, hi = max(bv.lo, 0.0), bv.hi
        rows.append(PointCertificate(x, (float(lo), float(hi)), rho * rho, bool(hi <= rho * rho + CERTIFY_SLACK)))
    return CertificationReport(rho, n, tuple(rows))
