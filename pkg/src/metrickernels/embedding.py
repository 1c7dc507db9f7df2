"""Distance-sequence embeddings of a finite metric space into l2.

Three sequences are built over a basis enumeration ``(x_n)`` of the points
and a scale ``q > 1``, all sharing the normalisation
``c_phi = sqrt(q^2 - 1) / q``:

* ``phi(x)_n = c_phi d(x, x_n) / q^n`` -- the full injective embedding;
* ``B(phi_hat(x))_n = c_phi d(x, y_beta(n)) / q^n`` -- the covering
  surrogate, where ``phi_hat(x) = (d(x, y_j) / sqrt(J))_j`` lives in
  ``R^J`` and ``B`` is the isometry driven by the balanced assignment
  ``beta``;
* ``B_t(phi_t(x))`` -- ``phi`` truncated to its first ``N`` terms and
  zero-padded.

Only finite prefixes are ever materialised. Every omitted term of a
product or squared difference of two such sequences is at most
``c_phi^2 D_X^2 q^(-2n)``, so the neglected tail beyond ``n`` terms is at
most ``D_X^2 q^(-2n)``; :class:`BoundedValue` carries that certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .covering import Covering
from .errors import (
    ConfigMismatch,
    DimensionMismatch,
    InsufficientPrefix,
    InternalInfeasible,
    NOutOfRange,
    QOutOfRange,
    ValidationError,
)
from .metric import FiniteMetricSpace

DEFAULT_TAIL = 1e-10
GUARD_BITS = 64


@dataclass(frozen=True)
class BoundedValue:
    """A truncated sum together with a rigorous bound on what was dropped.

    The exact quantity lies in ``[value - half_width, value + half_width]``.
    """

    value: float
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def lo(self) -> float:
        return self.value - self.half_width

    @property
    def hi(self) -> float:
        return self.value + self.half_width

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    @classmethod
    def from_interval(cls, lo: float, hi: float) -> "BoundedValue":
        return cls(0.5 * (lo + hi), 0.5 * (hi - lo))

    def to_dict(self) -> dict:
        return {"value": self.value, "half_width": self.half_width}


# constants and admissible scales

def c_phi(q: float) -> float:
    return math.sqrt(q * q - 1) / q


def c_b(q: float, n_centers: int) -> float:
    return math.sqrt(n_centers * (q * q - 1)) / q


def q_upper_bound(n_centers: int) -> float:
    """Supremum of admissible ``q`` for a covering with ``J`` centers."""
    if n_centers <= 1:
        return math.inf
    return math.sqrt(1 + 1 / (n_centers - 1))


def check_q(q: float, n_centers: int = 1) -> float:
    q = float(q)
    upper = q_upper_bound(n_centers)
    if not (1 < q < upper):
        hi = "inf" if math.isinf(upper) else f"{upper:.9g}"
        raise QOutOfRange(f"q={q!r} is outside the admissible interval (1, {hi}) for J={n_centers}")
    return q


def default_q(n_centers: int) -> float:
    """Midpoint of the admissible interval; 2.0 when any ``q > 1`` works."""
    upper = q_upper_bound(n_centers)
    if math.isinf(upper):
        return 2.0
    return 1 + 0.5 * (upper - 1)


def default_prefix(diameter: float, q: float, eps_tail: float = DEFAULT_TAIL) -> int:
    """Smallest ``N`` with ``D_X^2 q^(-2N) <= eps_tail`` (at least 1)."""
    if diameter <= 0 or diameter**2 <= eps_tail:
        return 1
    return max(1, math.ceil(math.log(diameter**2 / eps_tail) / (2 * math.log(q))))


def tail_sq_bound(diameter: float, q: float, n: int) -> float:
    """Bound on the l2 mass of terms ``n, n+1, ...`` of any of the sequences."""
    return diameter**2 * q ** (-2.0 * n)


@dataclass(frozen=True)
class EmbeddingConfig:
    q: float
    N: int
    n_centers: int = 1
    c_phi: float = field(init=False)
    c_b: float = field(init=False)

    def __post_init__(self):
        if not self.q > 1:
            raise QOutOfRange(f"q must be > 1, got {self.q!r}")
        if self.N < 1:
            raise NOutOfRange(f"prefix length must be >= 1, got {self.N}")
        cp, cb = c_phi(self.q), c_b(self.q, self.n_centers)
        # guards the identity c_B / sqrt(J) = c_phi used by the surrogate bound
        assert math.isclose(cb / math.sqrt(self.n_centers), cp, rel_tol=1e-12)
        assert math.isclose(cp * cp * self.q**2 / (self.q**2 - 1), 1.0, rel_tol=1e-12)
        object.__setattr__(self, "c_phi", cp)
        object.__setattr__(self, "c_b", cb)

    @property
    def decay(self) -> np.ndarray:
        """``q^(-n)`` for ``n < N``."""
        return self.q ** -np.arange(self.N, dtype=float)


# series splitting

@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """Prefix of a split of ``sum_n q^(-n)`` into ``J`` parts.

    ``alpha_prefix`` holds 0-based part indices. ``deficits[j]`` is
    ``targets[j] - partial_sums[j]``, carried separately because it can be
    far below the float resolution of the targets.
    """

    q: float
    alpha_prefix: np.ndarray
    partial_sums: np.ndarray
    targets: np.ndarray
    deficits: np.ndarray

    @property
    def n_parts(self) -> int:
        return len(self.targets)

    @property
    def total_deficit(self) -> float:
        return math.fsum(self.deficits)


def _exact_weights(lambdas, n_parts):
    fr = [Fraction(x) for x in lambdas]
    if len(fr) != n_parts:
        raise DimensionMismatch(f"{len(fr)} weights for {n_parts} parts")
    if any(x <= 0 for x in fr):
        raise ValidationError("split weights must be positive")
    total = sum(fr)
    if abs(float(total) - 1) > 1e-12:
        raise ValidationError(f"split weights must sum to 1, got {float(total)!r}")
    # renormalise exactly so the targets add up to the whole series
    return [x / total for x in fr]


def split_series(n_parts: int, q: float, lambdas: Sequence, N: int) -> SplitAssignment:
    """Greedily split ``sum_n q^(-n)`` into parts with sums ``lambda_j q/(q-1)``.

    Step ``n`` gives ``q^(-n)`` to the first part whose running sum stays
    strictly below its target. This is always possible when
    ``1 < q < 1 + 1/(J-1)``, and every part then converges to its target.

    The greedy map expands errors by ``q`` per step, so it runs in
    fixed-point integer arithmetic with ``N log2(q) + 64`` fractional bits;
    decisions match exact rational arithmetic except at ties closer than
    ``2^-64`` relative to the current term.
    """
    if n_parts < 2:
        raise ValidationError(f"splitting needs at least 2 parts, got {n_parts}")
    q = float(q)
    if not (1 < q < 1 + 1 / (n_parts - 1)):
        raise QOutOfRange(
            f"q={q!r} is outside the admissible interval (1, {1 + 1 / (n_parts - 1):.9g}) for J={n_parts}"
        )
    if N < 1:
        raise NOutOfRange(f"prefix length must be >= 1, got {N}")
    weights = _exact_weights(lambdas, n_parts)

    qf = Fraction(q)
    num, den = qf.numerator, qf.denominator
    bits = math.ceil(N * math.log2(q)) + N.bit_length() + GUARD_BITS
    one = 1 << bits
    whole = qf / (qf - 1)
    remaining = [math.floor(w * whole * one) for w in weights]
    term = one
    alpha = np.empty(N, dtype=np.int64)
    for n in range(N):
        for j in range(n_parts):
            if remaining[j] > term:
                break
        else:
            raise InternalInfeasible(f"no admissible part at step {n} (q={q!r}, J={n_parts})")
        remaining[j] -= term
        alpha[n] = j
        term = term * den // num

    powers = q ** -np.arange(N, dtype=float)
    partial = np.array([math.fsum(powers[alpha == j]) for j in range(n_parts)])
    targets = np.array([float(w * whole) for w in weights])
    deficits = np.array([float(Fraction(r, one)) for r in remaining])
    for arr in (alpha, partial, targets, deficits):
        arr.setflags(write=False)
    return SplitAssignment(q, alpha, partial, targets, deficits)


def adapted_beta(covering: Covering, q: float, N: int) -> np.ndarray:
    """Region assignment ``beta`` balancing ``sum_n q^(-2n)`` over the regions.

    Each region receives ``q^2 / (J (q^2 - 1))`` of the series in the limit.
    """
    n_centers = covering.n_centers
    check_q(q, n_centers)
    if N < 1:
        raise NOutOfRange(f"prefix length must be >= 1, got {N}")
    if n_centers == 1:
        beta = np.zeros(N, dtype=np.int64)
    else:
        split = split_series(n_centers, q * q, [Fraction(1, n_centers)] * n_centers, N)
        beta = np.array(split.alpha_prefix)
    beta.setflags(write=False)
    return beta


def adapted_basis(covering: Covering, beta: np.ndarray) -> np.ndarray:
    """Basis point for each ``n``: the next point of region ``beta[n]``.

    Each region is walked cyclically in increasing index order.
    """
    basis = np.empty(len(beta), dtype=np.int64)
    for j, region in enumerate(covering.regions()):
        slots = np.flatnonzero(beta == j)
        basis[slots] = region[np.arange(len(slots)) % len(region)]
    basis.setflags(write=False)
    return basis


def cyclic_basis(basis: Sequence[int], N: int) -> np.ndarray:
    basis = np.asarray(basis, dtype=np.int64)
    if basis.size == 0:
        raise ValidationError("basis enumeration is empty")
    return basis[np.arange(N) % basis.size]


# feature vectors

def phi_hat(space: FiniteMetricSpace, covering: Covering, x: int) -> np.ndarray:
    """``(d(x, y_j) / sqrt(J))_j``."""
    x = space.check_index(x)
    return space.dist[x, list(covering.centers)] / math.sqrt(covering.n_centers)


def phi_hat_matrix(space: FiniteMetricSpace, covering: Covering, points=None) -> np.ndarray:
    rows = space.dist if points is None else space.dist[np.asarray(points, dtype=int)]
    return rows[:, list(covering.centers)] / math.sqrt(covering.n_centers)


def phi_prefix(space: FiniteMetricSpace, basis: Sequence[int], config: EmbeddingConfig, x: int) -> np.ndarray:
    """First ``N`` terms ``c_phi d(x, x_n) / q^n`` of the full embedding.

    The l2 mass of the omitted terms is at most ``tail_sq_bound(D_X, q, N)``.
    """
    x = space.check_index(x)
    idx = cyclic_basis(basis, config.N)
    return config.c_phi * space.dist[x, idx] * config.decay


def phi_t(space: FiniteMetricSpace, basis: Sequence[int], config: EmbeddingConfig, x: int) -> np.ndarray:
    """Truncated embedding in ``R^N`` defining the kernel ``k_t``."""
    if config.N < 2:
        raise NOutOfRange(f"truncation length must be >= 2, got {config.N}")
    return phi_prefix(space, basis, config, x)


def phi_prefix_matrix(space: FiniteMetricSpace, basis, q: float, N: int, points=None) -> np.ndarray:
    """Rows ``phi_prefix(x)`` for every ``x`` in ``points`` (default: all)."""
    idx = cyclic_basis(basis, N)
    rows = space.dist if points is None else space.dist[np.asarray(points, dtype=int)]
    return c_phi(q) * rows[:, idx] * q ** -np.arange(N, dtype=float)


def b_apply_prefix(u, beta: Sequence[int], config: EmbeddingConfig) -> np.ndarray:
    """First ``N`` terms ``c_B u_beta(n) / q^n`` of the isometry ``B``."""
    u = np.asarray(u, dtype=float)
    beta = np.asarray(beta, dtype=np.int64)
    if u.ndim != 1 or u.shape[0] != config.n_centers:
        raise DimensionMismatch(f"vector of length {u.shape} does not match J={config.n_centers}")
    if len(beta) < config.N:
        raise DimensionMismatch(f"beta has {len(beta)} entries, need {config.N}")
    beta = beta[: config.N]
    if beta.size and (beta.min() < 0 or beta.max() >= config.n_centers):
        raise DimensionMismatch("beta entries fall outside [0, J)")
    return config.c_b * u[beta] * config.decay


# symbolic sequences and certified inner products

SEQUENCE_KINDS = ("phi", "b_phi_hat", "bt_phi_t")


@dataclass(frozen=True, eq=False)
class EmbeddingContext:
    """Shared ingredients of the sequences compared by the certified products.

    ``basis`` and ``beta`` are materialised up to ``n_max`` terms.
    ``truncation`` is the length ``N`` of ``phi_t`` when truncated sequences
    are in play.
    """

    space: FiniteMetricSpace
    q: float
    basis: np.ndarray
    n_max: int
    covering: Covering | None = None
    beta: np.ndarray | None = None
    truncation: int | None = None

    @classmethod
    def for_covering(cls, space, covering: Covering, q: float, n_max: int) -> "EmbeddingContext":
        beta = adapted_beta(covering, q, n_max)
        return cls(space, float(q), adapted_basis(covering, beta), n_max, covering, beta)

    @classmethod
    def for_truncation(cls, space, q: float, N: int, n_max: int, basis=None) -> "EmbeddingContext":
        if N < 2:
            raise NOutOfRange(f"truncation length must be >= 2, got {N}")
        if not q > 1:
            raise QOutOfRange(f"q must be > 1, got {q!r}")
        basis = np.arange(space.size) if basis is None else basis
        return cls(space, float(q), cyclic_basis(basis, n_max), n_max, truncation=int(N))

    def sequence(self, kind: str, x: int) -> "EmbeddedSequence":
        if kind not in SEQUENCE_KINDS:
            raise ValidationError(f"unknown sequence kind {kind!r}")
        if kind == "b_phi_hat" and self.covering is None:
            raise ConfigMismatch("b_phi_hat needs a covering context")
        if kind == "bt_phi_t" and self.truncation is None:
            raise ConfigMismatch("bt_phi_t needs a truncation context")
        return EmbeddedSequence(kind, self.space.check_index(x), self)

    def phi(self, x):
        return self.sequence("phi", x)

    def b_phi_hat(self, x):
        return self.sequence("b_phi_hat", x)

    def bt_phi_t(self, x):
        return self.sequence("bt_phi_t", x)

    def prefix_matrix(self, kind: str, n: int, points=None) -> np.ndarray:
        """Prefix rows of one sequence kind for many points at once."""
        if n > self.n_max:
            raise InsufficientPrefix(f"prefix {n} exceeds the materialised length {self.n_max}")
        rows = self.space.dist if points is None else self.space.dist[np.asarray(points, dtype=int)]
        scale = c_phi(self.q) * self.q ** -np.arange(n, dtype=float)
        if kind == "phi":
            return rows[:, self.basis[:n]] * scale
        if kind == "b_phi_hat":
            centers = np.asarray(self.covering.centers)
            return rows[:, centers[self.beta[:n]]] * scale
        out = rows[:, self.basis[:n]] * scale
        out[:, self.truncation:] = 0.0
        return out


@dataclass(frozen=True)
class EmbeddedSequence:
    kind: str
    point: int
    context: EmbeddingContext

    def prefix(self, n: int) -> np.ndarray:
        return self.context.prefix_matrix(self.kind, n, [self.point])[0]


def _same_context(a: EmbeddedSequence, b: EmbeddedSequence) -> EmbeddingContext:
    if a.context is not b.context:
        raise ConfigMismatch("sequences come from different embedding contexts")
    return a.context


def inner_product_bounded(a: EmbeddedSequence, b: EmbeddedSequence, n: int) -> BoundedValue:
    """``<a, b>_l2`` from an ``n``-term prefix, with half-width ``D_X^2 q^(-2n)``."""
    ctx = _same_context(a, b)
    value = math.fsum(a.prefix(n) * b.prefix(n))
    return BoundedValue(value, tail_sq_bound(ctx.space.diameter, ctx.q, n))


def sq_distance_bounded(a: EmbeddedSequence, b: EmbeddedSequence, n: int) -> BoundedValue:
    """``||a - b||^2`` from an ``n``-term prefix, with half-width ``D_X^2 q^(-2n)``."""
    ctx = _same_context(a, b)
    diff = a.prefix(n) - b.prefix(n)
    return BoundedValue(math.fsum(diff * diff), tail_sq_bound(ctx.space.diameter, ctx.q, n))


def distance_bounded(a: EmbeddedSequence, b: EmbeddedSequence, n: int) -> BoundedValue:
    """``||a - b||`` as an interval, from :func:`sq_distance_bounded`."""
    sq = sq_distance_bounded(a, b, n)
    return BoundedValue.from_interval(math.sqrt(max(sq.lo, 0.0)), math.sqrt(sq.hi))
