import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrickernels.covering import greedy_cover, make_covering
from metrickernels.embedding import (
    EmbeddingConfig,
    EmbeddingContext,
    adapted_basis,
    adapted_beta,
    b_apply_prefix,
    c_b,
    c_phi,
    default_prefix,
    default_q,
    distance_bounded,
    inner_product_bounded,
    phi_hat,
    phi_prefix,
    phi_t,
    q_upper_bound,
    split_series,
    sq_distance_bounded,
)
from metrickernels.errors import (
    ConfigMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    NOutOfRange,
    QOutOfRange,
)
from metrickernels.fixtures import line3

from conftest import fixture_space
from oracles import greedy_split


def test_split_worked_example():
    s = split_series(2, 1.5, [0.5, 0.5], 5)
    assert s.alpha_prefix.tolist() == [0, 1, 0, 1, 1]
    np.testing.assert_allclose(s.partial_sums, [1.4444, 1.1605], atol=1e-4)
    np.testing.assert_allclose(s.targets, [1.5, 1.5])


def test_split_rejects_large_q():
    with pytest.raises(QOutOfRange):
        split_series(2, 2.5, [0.5, 0.5], 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.floats(0.05, 0.95), st.data())
def test_split_matches_exact_replay(J, frac, data):
    q = 1 + frac / (J - 1)
    raw = data.draw(st.lists(st.integers(1, 100), min_size=J, max_size=J))
    lambdas = [Fraction(r, sum(raw)) for r in raw]
    N = data.draw(st.integers(1, 80))
    s = split_series(J, q, lambdas, N)
    alpha, partial, targets = greedy_split(J, q, lambdas, N)
    assert s.alpha_prefix.tolist() == alpha
    np.testing.assert_allclose(s.deficits, [float(t - p) for t, p in zip(targets, partial)], rtol=1e-12, atol=0)


def test_constants_identities():
    for J in (1, 2, 5):
        q = default_q(J)
        assert 1 < q < q_upper_bound(J)
        assert c_b(q, J) / math.sqrt(J) == pytest.approx(c_phi(q), rel=1e-15)


def test_adapted_beta_examples():
    cov1 = greedy_cover(line3(), 2.0)
    assert adapted_beta(cov1, 2.0, 6).tolist() == [0] * 6
    cov2 = make_covering(fixture_space("two_point"), [0, 1], 1.0)
    beta = adapted_beta(cov2, 1.1, 4)
    assert beta.tolist() == greedy_split(2, Fraction(1.1 * 1.1), [Fraction(1, 2)] * 2, 4)[0]
    assert set(adapted_beta(cov2, 1.1, 60).tolist()) == {0, 1}


def test_adapted_basis_walks_regions():
    space = fixture_space("circle200")
    cov = greedy_cover(space, space.diameter / 4)
    beta = adapted_beta(cov, default_q(cov.n_centers), 400)
    basis = adapted_basis(cov, beta)
    assert np.array_equal(cov.region_of[basis], beta)


def test_phi_hat_values():
    space = fixture_space("two_point")
    cov = make_covering(space, [0, 1], 1.0)
    np.testing.assert_allclose(phi_hat(space, cov, 0), [0, 1 / math.sqrt(2)])
    with pytest.raises(IndexOutOfRange):
        phi_hat(space, cov, 2)


def test_phi_prefix_values():
    space = fixture_space("two_point")
    v = phi_prefix(space, [0, 1], EmbeddingConfig(2.0, 4), 0)
    r3 = math.sqrt(3)
    np.testing.assert_allclose(v, [0, r3 / 4, 0, r3 / 16], rtol=1e-15)
    np.testing.assert_array_equal(phi_t(space, [0, 1], EmbeddingConfig(2.0, 4), 0), v)
    with pytest.raises(NOutOfRange):
        phi_t(space, [0, 1], EmbeddingConfig(2.0, 1), 0)


def test_b_apply_examples():
    cfg = EmbeddingConfig(2.0, 3, 1)
    np.testing.assert_allclose(b_apply_prefix([1.0], [0, 0, 0], cfg), math.sqrt(3) / 2 * np.array([1, 0.5, 0.25]))
    np.testing.assert_array_equal(b_apply_prefix([0.0], [0, 0, 0], cfg), 0)
    with pytest.raises(DimensionMismatch):
        b_apply_prefix([1.0, 2.0], [0, 0, 0], cfg)


@pytest.mark.parametrize("name", ["line3", "circle200", "graph50"])
def test_lipschitz_properties(name):
    space = fixture_space(name)
    rng = np.random.default_rng(1)
    N = 12
    cfg = EmbeddingConfig(2.0, N)
    cov = greedy_cover(space, space.diameter / 2)
    for _ in range(50):
        x, y = rng.integers(space.size, size=2)
        d = space.dist[x, y]
        diff = phi_prefix(space, range(space.size), cfg, x) - phi_prefix(space, range(space.size), cfg, y)
        assert np.linalg.norm(diff) <= math.sqrt(1 - 2.0 ** (-2 * N)) * d + 1e-12
        assert np.linalg.norm(phi_hat(space, cov, x) - phi_hat(space, cov, y)) <= d + 1e-12
        assert np.linalg.norm(phi_hat(space, cov, x)) <= space.diameter + 1e-12


def test_inner_product_half_width():
    space = fixture_space("two_point")
    ctx = EmbeddingContext.for_truncation(space, 2.0, 4, 40)
    bv = inner_product_bounded(ctx.phi(0), ctx.phi(0), 10)
    assert bv.half_width == 2.0**-20
    bv11 = inner_product_bounded(ctx.phi(0), ctx.phi(0), 11)
    assert bv11.half_width == pytest.approx(bv.half_width / 4)


def test_isometry_through_contexts():
    space = fixture_space("circle200")
    cov = greedy_cover(space, space.diameter / 4)
    q = default_q(cov.n_centers)
    n = default_prefix(space.diameter, q)
    ctx = EmbeddingContext.for_covering(space, cov, q, n)
    for x, y in [(0, 1), (3, 150), (77, 77)]:
        bv = inner_product_bounded(ctx.b_phi_hat(x), ctx.b_phi_hat(y), n)
        exact = float(phi_hat(space, cov, x) @ phi_hat(space, cov, y))
        assert abs(bv.value - exact) <= bv.half_width + 1e-12


def test_truncation_gap_bound():
    space = fixture_space("graph50")
    for N in (2, 8, 16):
        ctx = EmbeddingContext.for_truncation(space, 2.0, N, 60)
        for x in range(0, 50, 7):
            gap = distance_bounded(ctx.phi(x), ctx.bt_phi_t(x), 60)
            assert gap.hi <= space.diameter * 2.0**-N + 1e-9


def test_context_mismatch():
    space = fixture_space("two_point")
    a = EmbeddingContext.for_truncation(space, 2.0, 4, 20)
    b = EmbeddingContext.for_truncation(space, 2.0, 4, 20)
    with pytest.raises(ConfigMismatch):
        sq_distance_bounded(a.phi(0), b.phi(1), 10)
    with pytest.raises(ConfigMismatch):
        a.b_phi_hat(0)
