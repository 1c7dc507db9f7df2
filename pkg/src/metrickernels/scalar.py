"""Scalar functions ``K`` behind Taylor and radial kernels.

A Taylor kernel applies ``K(t) = sum_n a_n t^n`` (all ``a_n > 0``) to an
inner product; a radial kernel applies the Laplace transform
``K(t) = sum_i w_i exp(-s_i t)`` of a finite discrete measure to a squared
distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import (
    DivergentSeries,
    DomainExceeded,
    InputFormatError,
    InvalidKernelSpec,
    NegativeArgument,
)

SERIES_RTOL = 1e-14
MAX_TERMS = 100_000

TAYLOR_KINDS = ("exponential", "geometric", "custom")


@dataclass(frozen=True)
class TaylorSpec:
    """Power series ``K`` with strictly positive coefficients.

    ``param`` is the scale ``s`` (``a_n = s**n / n!``) for ``exponential``
    and the ratio ``r`` (``a_n = r**n``) for ``geometric``; ``coeffs`` lists
    ``a_0..a_d`` for ``custom``. ``domain_bound`` is the largest ``|t|`` at
    which ``K`` may be evaluated; ``None`` means the natural radius of
    convergence.
    """

    kind: str
    param: float = 1.0
    coeffs: tuple[float, ...] = ()
    domain_bound: float | None = None

    def __post_init__(self):
        if self.kind not in TAYLOR_KINDS:
            raise InvalidKernelSpec(f"unknown Taylor kind {self.kind!r}; expected one of {TAYLOR_KINDS}")
        if self.kind == "custom":
            if not self.coeffs:
                raise InvalidKernelSpec("custom Taylor spec needs at least one coefficient")
            object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
            if not all(a > 0 and math.isfinite(a) for a in self.coeffs):
                raise InvalidKernelSpec(f"Taylor coefficients must all be > 0, got {self.coeffs}")
        elif not (self.param > 0 and math.isfinite(self.param)):
            raise InvalidKernelSpec(f"{self.kind} parameter must be > 0, got {self.param!r}")
        if self.domain_bound is None:
            return
        if not self.domain_bound > 0:
            raise InvalidKernelSpec(f"domain bound must be > 0, got {self.domain_bound!r}")
        if self.kind == "geometric" and self.param * self.domain_bound >= 1:
            raise DivergentSeries(
                f"geometric series with ratio {self.param:.9g} diverges on "
                f"[-{self.domain_bound:.9g}, {self.domain_bound:.9g}] (need r*T < 1)"
            )

    @classmethod
    def exponential(cls, scale: float = 1.0, domain_bound: float | None = None) -> "TaylorSpec":
        return cls("exponential", param=scale, domain_bound=domain_bound)

    @classmethod
    def geometric(cls, ratio: float, domain_bound: float | None = None) -> "TaylorSpec":
        return cls("geometric", param=ratio, domain_bound=domain_bound)

    @classmethod
    def custom(cls, coeffs, domain_bound: float | None = None) -> "TaylorSpec":
        return cls("custom", coeffs=tuple(coeffs), domain_bound=domain_bound)

    def with_domain(self, bound: float) -> "TaylorSpec":
        return replace(self, domain_bound=float(bound))

    def coefficient(self, n: int) -> float:
        if self.kind == "exponential":
            return self.param**n / math.factorial(n)
        if self.kind == "geometric":
            return self.param**n
        return self.coeffs[n] if n < len(self.coeffs) else 0.0

    def to_dict(self) -> dict:
        if self.kind == "custom":
            return {"type": "taylor", "kind": "custom", "coeffs": list(self.coeffs)}
        key = "scale" if self.kind == "exponential" else "ratio"
        return {"type": "taylor", "kind": self.kind, key: self.param}


@dataclass(frozen=True)
class RadialSpec:
    """Discrete measure ``sum_i w_i delta_{s_i}`` given as ``(s_i, w_i)`` atoms."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        try:
            atoms = tuple((float(s), float(w)) for s, w in self.atoms)
        except (TypeError, ValueError):
            raise InvalidKernelSpec(f"radial atoms must be (s, w) pairs, got {self.atoms!r}") from None
        if not atoms:
            raise InvalidKernelSpec("radial spec needs at least one atom")
        for s, w in atoms:
            if not (s >= 0 and math.isfinite(s)):
                raise InvalidKernelSpec(f"atom location must be >= 0, got {s!r}")
            if not (w > 0 and math.isfinite(w)):
                raise InvalidKernelSpec(f"atom weight must be > 0, got {w!r}")
        if not any(s > 0 for s, _ in atoms):
            raise InvalidKernelSpec("the measure must not be supported on {0} alone")
        object.__setattr__(self, "atoms", atoms)

    @property
    def locations(self) -> np.ndarray:
        return np.array([s for s, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def total_mass(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    def to_dict(self) -> dict:
        return {"type": "radial", "atoms": [list(a) for a in self.atoms]}


ScalarKernelSpec = Union[TaylorSpec, RadialSpec]


def _sum_series(first, ratio: Callable[[int, np.ndarray], np.ndarray], rtol=SERIES_RTOL):
    """Sum ``sum_n term_n`` where ``term_{n+1} = term_n * ratio(n, .)``.

    ``|ratio(n, .)|`` must be nonincreasing in ``n`` from the point it drops
    below one, so ``|term_n| * r / (1 - r)`` bounds the remaining tail.
    Returns ``(partial_sum, tail_bound)``.
    """
    term = np.array(first, dtype=float)
    total = term.copy()
    for n in range(MAX_TERMS):
        rho = ratio(n, term)
        r = np.abs(rho)
        term = term * rho
        total = total + term
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(r < 1, np.abs(term) * r / (1 - r), np.inf)
        if np.all(tail <= rtol * (1 + np.abs(total))):
            return total, tail
    raise DivergentSeries(f"series did not converge within {MAX_TERMS} terms")


def _check_domain(spec: TaylorSpec, t: np.ndarray):
    if spec.domain_bound is not None and np.any(np.abs(t) > spec.domain_bound):
        worst = float(np.max(np.abs(t)))
        raise DomainExceeded(f"|t| = {worst:.9g} exceeds the domain bound {spec.domain_bound:.9g}")
    if spec.kind == "geometric" and np.any(spec.param * np.abs(t) >= 1):
        raise DivergentSeries(f"geometric series with ratio {spec.param:.9g} diverges at |t| >= {1 / spec.param:.9g}")


def taylor_eval_with_tail(spec: TaylorSpec, t):
    """``(K(t), tail_bound)``; the bound covers series truncation only."""
    t = np.asarray(t, dtype=float)
    _check_domain(spec, t)
    if spec.kind == "custom":
        return np.polynomial.polynomial.polyval(t, spec.coeffs), np.zeros_like(t)
    if spec.kind == "geometric":
        rt = spec.param * t
        value, tail = _sum_series(np.ones_like(t), lambda n, _: rt)
        return value, tail
    st = spec.param * t
    return _sum_series(np.ones_like(t), lambda n, _: st / (n + 1))


def taylor_eval(spec: TaylorSpec, t):
    """Evaluate ``K(t) = sum_n a_n t^n`` to relative tail ``1e-14``."""
    value, _ = taylor_eval_with_tail(spec, t)
    return float(value) if value.ndim == 0 else value


def radial_eval(spec: RadialSpec, t):
    """Evaluate ``K(t) = sum_i w_i exp(-s_i t)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeArgument(f"radial K needs t >= 0, got {float(np.min(t))!r}")
    value = np.zeros_like(t)
    for s, w in spec.atoms:
        value = value + w * np.exp(-s * t)
    return float(value) if value.ndim == 0 else value


def scalar_eval(spec: ScalarKernelSpec, t):
    if isinstance(spec, TaylorSpec):
        return taylor_eval(spec, t)
    return radial_eval(spec, t)


def derivative_bound(spec: ScalarKernelSpec, diameter: float) -> float:
    """``C_K' = max |K'|`` on the kernel's working domain for diameter ``D_X``.

    Taylor: the domain is ``[-4 D_X^2, 4 D_X^2]`` and, all coefficients being
    positive, the maximum sits at ``t = 4 D_X^2``. Radial: the domain is
    ``[0, 4 D_X^2]`` and ``|K'|`` peaks at ``t = 0`` with value
    ``sum_i w_i s_i``.
    """
    if isinstance(spec, RadialSpec):
        return math.fsum(s * w for s, w in spec.atoms)
    T = 4.0 * diameter**2
    if spec.kind == "custom":
        deriv = np.polynomial.polynomial.polyder(spec.coeffs)
        return float(np.polynomial.polynomial.polyval(T, deriv)) if len(spec.coeffs) > 1 else 0.0
    if spec.kind == "geometric":
        rT = spec.param * T
        if rT >= 1:
            raise DivergentSeries(f"derivative series diverges at t = 4 D_X^2 = {T:.9g}")
        # sum_m (m+1) r^(m+1) T^m
        value, _ = _sum_series(spec.param, lambda m, _: (m + 2) / (m + 1) * rT)
        return float(value)
    # sum_m s^(m+1) T^m / m!
    sT = spec.param * T
    value, _ = _sum_series(spec.param, lambda m, _: sT / (m + 1))
    return float(value)


def kernel_spec_from_dict(data: dict) -> ScalarKernelSpec:
    """Parse the JSON kernel-spec format.

    ``{"type": "taylor", "kind": "exponential", "scale": 1.0}``,
    ``{"type": "taylor", "kind": "geometric", "ratio": 0.5}``,
    ``{"type": "taylor", "kind": "custom", "coeffs": [...]}`` or
    ``{"type": "radial", "atoms": [[s, w], ...]}``.
    """
    if not isinstance(data, dict):
        raise InvalidKernelSpec("kernel spec must be a JSON object")
    kind = data.get("type")
    try:
        if kind == "radial":
            return RadialSpec(tuple(tuple(a) for a in data["atoms"]))
        if kind == "taylor":
            sub = data.get("kind")
            if sub == "exponential":
                return TaylorSpec.exponential(float(data.get("scale", 1.0)))
            if sub == "geometric":
                return TaylorSpec.geometric(float(data["ratio"]))
            if sub == "custom":
                return TaylorSpec.custom(data["coeffs"])
            raise InvalidKernelSpec(f"unknown Taylor kind {sub!r}")
    except KeyError as exc:
        raise InvalidKernelSpec(f"kernel spec is missing field {exc}") from None
    except TypeError as exc:
        raise InvalidKernelSpec(f"malformed kernel spec: {exc}") from None
    raise InvalidKernelSpec(f"unknown kernel type {kind!r}; expected 'taylor' or 'radial'")


def load_kernel_spec(source) -> ScalarKernelSpec:
    """Read a kernel spec from a JSON file path or an inline JSON string."""
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            return kernel_spec_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"invalid inline kernel JSON: {exc}") from None
    path = Path(text)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise InputFormatError(str(exc), path=path) from None
    try:
        return kernel_spec_from_dict(json.loads(raw))
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from None
