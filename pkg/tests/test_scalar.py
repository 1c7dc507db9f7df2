import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrickernels.errors import (
    DivergentSeries,
    DomainExceeded,
    InputFormatError,
    InvalidKernelSpec,
    NegativeArgument,
)
from metrickernels.scalar import (
    RadialSpec,
    TaylorSpec,
    derivative_bound,
    load_kernel_spec,
    radial_eval,
    taylor_eval,
    taylor_eval_with_tail,
)

from oracles import exp_series


def test_exponential_values():
    s = TaylorSpec.exponential(1.0)
    assert taylor_eval(s, 0.0) == 1.0
    assert taylor_eval(s, 1.0) == pytest.approx(exp_series(1.0), abs=1e-12)


def test_geometric_value():
    assert taylor_eval(TaylorSpec.geometric(0.5), 1.0) == pytest.approx(2.0, abs=1e-12)


def test_geometric_divergence_and_domain():
    with pytest.raises(DivergentSeries):
        TaylorSpec.geometric(0.5).with_domain(2.0)
    s = TaylorSpec.exponential(1.0).with_domain(1.0)
    with pytest.raises(DomainExceeded):
        taylor_eval(s, 1.5)


def test_custom_is_polynomial():
    s = TaylorSpec.custom([1, 0.5, 0.25])
    assert taylor_eval(s, 2.0) == 1 + 1 + 1
    with pytest.raises(InvalidKernelSpec):
        TaylorSpec.custom([1, 0, 1])


def test_tail_is_reported():
    value, tail = taylor_eval_with_tail(TaylorSpec.exponential(2.0), 1.5)
    assert abs(value - math.exp(3.0)) <= max(tail, 1e-13 * value)


def test_radial_values():
    r = RadialSpec([(1, 1)])
    assert radial_eval(r, 0.0) == 1
    assert radial_eval(r, 1.0) == pytest.approx(0.367879441, abs=1e-9)
    assert radial_eval(r, 2.0) == pytest.approx(0.135335, abs=1e-6)
    with pytest.raises(NegativeArgument):
        radial_eval(r, -0.1)


def test_radial_validation():
    with pytest.raises(InvalidKernelSpec):
        RadialSpec([(0, 1)])
    with pytest.raises(InvalidKernelSpec):
        RadialSpec([(1, 0)])
    with pytest.raises(InvalidKernelSpec):
        RadialSpec([(-1, 1)])


def test_derivative_bounds():
    assert derivative_bound(RadialSpec([(1, 1)]), 3.0) == 1
    assert derivative_bound(RadialSpec([(2, 0.5), (1, 1)]), 3.0) == 2
    assert derivative_bound(TaylorSpec.exponential(1.0), 0.5) == pytest.approx(exp_series(1.0), rel=1e-12)
    # geometric: K'(t) = r / (1 - r t)^2
    r, D = 0.1, 1.0
    assert derivative_bound(TaylorSpec.geometric(r), D) == pytest.approx(r / (1 - 4 * r * D * D) ** 2, rel=1e-12)
    # custom [1, .5, .25]: K'(t) = .5 + .5 t at t = 4
    assert derivative_bound(TaylorSpec.custom([1, 0.5, 0.25]), 1.0) == pytest.approx(2.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3), st.floats(-2, 2))
def test_exponential_matches_math_exp(scale, t):
    assert taylor_eval(TaylorSpec.exponential(scale), t) == pytest.approx(math.exp(scale * t), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 5), st.floats(0.01, 5)), min_size=1, max_size=5), st.floats(0, 10))
def test_radial_is_decreasing_and_bounded(atoms, t):
    r = RadialSpec(atoms)
    assert 0 < radial_eval(r, t) <= r.total_mass
    assert radial_eval(r, t + 0.5) <= radial_eval(r, t)


def test_load_spec_inline_and_file(tmp_path):
    spec = {"type": "taylor", "kind": "custom", "coeffs": [1, 0.5]}
    p = tmp_path / "k.json"
    p.write_text(json.dumps(spec))
    assert load_kernel_spec(p).coeffs == load_kernel_spec(json.dumps(spec)).coeffs
    with pytest.raises(InputFormatError):
        load_kernel_spec("{not json")
    with pytest.raises(InvalidKernelSpec):
        load_kernel_spec('{"type": "laplace"}')


def test_vector_evaluation():
    s = TaylorSpec.exponential(1.0)
    t = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(taylor_eval(s, t), np.exp(t), rtol=1e-13)
